// Entry point: hash routing between the three views (take a test, grade,
// leaderboard) and DOM wiring around the pure renderers.

import { ApiClient, ApiError } from './api.js';
import { renderGradingQueue, renderLeaderboard, renderNotFound, renderQuestion, renderReport } from './render.js';
import { SessionFlow } from './session.js';
import { formatSeconds } from './timer.js';

const api = new ApiClient('');
const app = () => document.getElementById('app')!;
const SESSION_KEY = 'uiq-session-id';

let ticker: number | undefined;

function stopTicker(): void {
  if (ticker !== undefined) {
    window.clearInterval(ticker);
    ticker = undefined;
  }
}

// -- test view ----------------------------------------------------------

function showStartForm(): void {
  stopTicker();
  app().innerHTML = `
    <div class="start">
      <h2>Take the timed test</h2>
      <p>42 questions, three minutes each. Answers judged on the server.</p>
      <form id="start-form">
        <input id="subject-name" placeholder="your name" required>
        <button type="submit">Start</button>
      </form>
    </div>`;
  document.getElementById('start-form')!.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const name = (document.getElementById('subject-name') as HTMLInputElement).value.trim();
    if (name) void startSession(name);
  });
}

function makeFlow(): SessionFlow {
  const flow = new SessionFlow(api, {
    onQuestion(view) {
      app().innerHTML = renderQuestion(view.question, view.index, view.total);
      const form = document.getElementById('answer-form') as HTMLFormElement;
      const input = document.getElementById('answer-input') as HTMLInputElement;
      form.addEventListener('submit', (ev) => {
        ev.preventDefault();
        void flow.submit(input.value);
      });
      input.focus();
      stopTicker();
      ticker = window.setInterval(() => {
        const label = document.getElementById('countdown');
        if (label) label.textContent = formatSeconds(view.countdown.secondsLeft(Date.now()));
        void flow.tick();
      }, 250);
    },
    onFinished() {
      stopTicker();
      void showReport();
    },
    onNotice(message) {
      const label = document.getElementById('countdown');
      if (label) label.textContent = message;
    },
  });
  return flow;
}

async function startSession(name: string): Promise<void> {
  const flow = makeFlow();
  const sessionId = await flow.start(name);
  window.localStorage.setItem(SESSION_KEY, sessionId);
}

async function resumeOrStart(): Promise<void> {
  const existing = window.localStorage.getItem(SESSION_KEY);
  if (!existing) {
    showStartForm();
    return;
  }
  try {
    const state = await api.sessionState(existing);
    if (state.status === 'in_progress') {
      await makeFlow().resume(existing);
      return;
    }
    await showReport();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      window.localStorage.removeItem(SESSION_KEY);
      showStartForm();
      return;
    }
    throw err;
  }
}

async function showReport(): Promise<void> {
  const sessionId = window.localStorage.getItem(SESSION_KEY);
  if (!sessionId) {
    showStartForm();
    return;
  }
  const report = await api.report(sessionId);
  app().innerHTML =
    renderReport(report) +
    `<p><button id="new-session">Start another session</button></p>`;
  document.getElementById('new-session')!.addEventListener('click', () => {
    window.localStorage.removeItem(SESSION_KEY);
    showStartForm();
  });
}

// -- grading view ----------------------------------------------------------

async function showGrading(): Promise<void> {
  stopTicker();
  const { items } = await api.gradingQueue();
  app().innerHTML = renderGradingQueue(items);
  for (const block of Array.from(document.querySelectorAll<HTMLElement>('.queue-item'))) {
    const answerId = block.dataset.answerId!;
    const notice = block.querySelector('.notice') as HTMLElement;
    for (const button of Array.from(block.querySelectorAll<HTMLButtonElement>('button'))) {
      button.addEventListener('click', async () => {
        try {
          await api.submitVerdict(answerId, button.dataset.action === 'pass');
          await showGrading(); // verdict stuck; refresh the queue
        } catch (err) {
          if (err instanceof ApiError && err.status === 409) {
            notice.textContent = 'already graded by someone else';
          } else {
            notice.textContent = String(err);
          }
        }
      });
    }
  }
}

// -- leaderboard view ---------------------------------------------------------

async function showLeaderboard(runId?: string): Promise<void> {
  stopTicker();
  const { runs } = await api.runs();
  let board;
  try {
    board = await api.leaderboard(runId);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      app().innerHTML = renderNotFound(`run ${runId ?? ''}`);
      return;
    }
    throw err;
  }
  const options = runs
    .map(
      (run) =>
        `<option value="${run.run_id}" ${run.run_id === board.run_id ? 'selected' : ''}>` +
        `${run.label} (${run.subjects} subjects)</option>`,
    )
    .join('');
  app().innerHTML = `
    <div class="board-view">
      <div class="board-controls"><label>run: <select id="run-select">${options}</select></label></div>
      ${renderLeaderboard(board)}
    </div>`;
  const select = document.getElementById('run-select');
  select?.addEventListener('change', () => {
    void showLeaderboard((select as HTMLSelectElement).value);
  });
}

// -- routing ------------------------------------------------------------------

function route(): void {
  const hash = window.location.hash || '#/test';
  for (const link of Array.from(document.querySelectorAll<HTMLAnchorElement>('nav a'))) {
    link.classList.toggle('active', link.getAttribute('href') === hash);
  }
  if (hash.startsWith('#/grade')) {
    void showGrading();
  } else if (hash.startsWith('#/board')) {
    void showLeaderboard();
  } else {
    void resumeOrStart();
  }
}

window.addEventListener('hashchange', route);
window.addEventListener('DOMContentLoaded', route);
