// HTML renderers. Pure string builders so they test without a DOM; main.ts
// assigns the output to innerHTML and wires events afterwards.

import type {
  GradingItem,
  LeaderboardEntry,
  LeaderboardResponse,
  QuestionView,
  ReportResponse,
} from './api.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

// -- session views ------------------------------------------------------

export function renderQuestion(q: QuestionView, index: number, total: number): string {
  let promptBlock: string;
  if (q.prompt_modality === 'audio' && q.prompt_asset_url) {
    promptBlock = `<audio controls src="${escapeHtml(q.prompt_asset_url)}"></audio>
      <p class="hint">Listen to the question, then type your answer.</p>`;
  } else if (q.prompt_modality === 'image' && q.prompt_asset_url) {
    promptBlock = `<img class="prompt-image" src="${escapeHtml(q.prompt_asset_url)}" alt="question image">
      <p class="hint">Read the question from the picture, then type your answer.</p>`;
  } else {
    promptBlock = `<p class="prompt" lang="${escapeHtml(q.language)}">${escapeHtml(q.prompt)}</p>`;
  }
  const responseHint =
    q.response_modality === 'text'
      ? ''
      : `<p class="hint">This one asks for ${escapeHtml(q.response_modality)} output; describe your answer in words and a grader will judge it.</p>`;
  return `
  <div class="question" data-question-id="${escapeHtml(q.id)}">
    <div class="progress">Question ${index + 1} of ${total}</div>
    <div class="countdown" id="countdown">3:00</div>
    ${promptBlock}
    ${responseHint}
    <form id="answer-form">
      <input id="answer-input" autocomplete="off" autofocus placeholder="your answer">
      <button type="submit">Answer</button>
    </form>
  </div>`;
}

export function renderReport(rep: ReportResponse): string {
  if (rep.status !== 'complete' || !rep.report) {
    const pending = rep.pending_manual ?? 0;
    return `
    <div class="report pending">
      <h2>Session finished</h2>
      <p>${pending} answer(s) are waiting for a human grader. Check back for your final score.</p>
    </div>`;
  }
  const r = rep.report;
  const cells = r.vector.values.map((v, i) => `<td title="subtest ${i + 1}">${v}</td>`).join('');
  const cats = Object.entries(r.categories)
    .map(([name, value]) => `<li>${escapeHtml(name)}: <b>${escapeHtml(value)}</b></li>`)
    .join('');
  return `
  <div class="report complete">
    <h2>${escapeHtml(r.subject.display_name)} scored <span class="iq">${escapeHtml(trimIq(r.iq))}</span></h2>
    <table class="vector"><tr>${cells}</tr></table>
    <ul class="categories">${cats}</ul>
  </div>`;
}

function trimIq(value: string): string {
  return value.includes('.') ? value.replace(/0+$/, '').replace(/\.$/, '') : value;
}

// -- grading queue --------------------------------------------------------

export function renderGradingQueue(items: GradingItem[]): string {
  if (items.length === 0) {
    return `<div class="queue empty"><p>The grading queue is empty. 🎉</p></div>`;
  }
  const blocks = items
    .map(
      (item) => `
    <div class="queue-item" data-answer-id="${escapeHtml(item.answer_id)}">
      <p class="q">${escapeHtml(item.prompt)}</p>
      <p class="rubric">${escapeHtml(item.rubric)}</p>
      <blockquote class="answer">${item.answer === null ? '<i>(no answer)</i>' : escapeHtml(item.answer)}</blockquote>
      <div class="actions">
        <button class="pass" data-action="pass">Pass</button>
        <button class="fail" data-action="fail">Fail</button>
        <span class="notice"></span>
      </div>
    </div>`,
    )
    .join('\n');
  return `<div class="queue">${blocks}</div>`;
}

// -- leaderboard -----------------------------------------------------------

export const CATEGORY_ORDER = ['Acquisition', 'Mastery', 'Innovation', 'Feedback'] as const;

export interface BarSegment {
  category: string;
  widthPercent: number; // of the whole 0..100 IQ scale
}

/** Stacked-bar segments: each category's IQ contribution, in scale points. */
export function barSegments(categories: Record<string, string>): BarSegment[] {
  return CATEGORY_ORDER.map((category) => ({
    category,
    widthPercent: Number(categories[category] ?? '0'),
  }));
}

export function renderBar(entry: LeaderboardEntry): string {
  const segments = barSegments(entry.categories)
    .map(
      (seg) =>
        `<span class="bar-seg cat-${seg.category.toLowerCase()}" data-cat="${seg.category}"` +
        ` style="width:${seg.widthPercent}%" title="${seg.category}: ${seg.widthPercent}"></span>`,
    )
    .join('');
  return `<span class="bar">${segments}</span>`;
}

export function renderLeaderboard(board: LeaderboardResponse): string {
  if (!board.run_id) {
    return `<div class="board empty"><p>No runs recorded yet.</p></div>`;
  }
  const rows = board.entries
    .map(
      (entry) => `
    <tr data-subject-id="${escapeHtml(entry.subject_id)}">
      <td class="rank">${entry.rank}</td>
      <td class="region">${escapeHtml(entry.region)}</td>
      <td class="group">${escapeHtml(entry.group)}</td>
      <td class="name">${escapeHtml(entry.name)}</td>
      <td class="iq">${escapeHtml(entry.iq)}</td>
      <td class="cats">${renderBar(entry)}</td>
    </tr>`,
    )
    .join('\n');
  return `
  <table class="board" data-run-id="${escapeHtml(board.run_id)}">
    <thead><tr><th>#</th><th>region</th><th>group</th><th>name</th><th>IQ</th><th>categories</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderNotFound(what: string): string {
  return `<div class="not-found"><p>${escapeHtml(what)} not found.</p></div>`;
}
