// Integration against the real service: the UI client code drives live
// sessions over HTTP exactly as the browser would.
//
// Covers the two release criteria for this frontend:
//   1. a session driven through the UI flow and the same answers replayed
//      through the raw API yield identical transcripts and identical IQ,
//      and a lapsed UI timer produces a timeout verdict decided by the
//      server clock;
//   2. the leaderboard for the fixture run lists 18Ages first at 97 and
//      renders zero-width Innovation bars for every search-engine row.

import { ChildProcess, spawn, spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { renderLeaderboard } from '../src/render.js';
import { SessionFlow } from '../src/session.js';

const REPO = resolve(__dirname, '..', '..');
const FIXTURES = join(REPO, 'fixtures');

interface Server {
  base: string;
  proc: ChildProcess;
}

async function freePort(): Promise<number> {
  return new Promise((resolvePort) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolvePort(port));
    });
  });
}

async function startServer(store: string, timeoutMs: number): Promise<Server> {
  const port = await freePort();
  const proc = spawn('uiq', ['serve', '--port', String(port), '--store', store, '--timeout-ms', String(timeoutMs)], {
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const res = await fetch(`${base}/api/runs`);
      if (res.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error('service did not come up');
    await new Promise((r) => setTimeout(r, 150));
  }
  return { base, proc };
}

// the engine behavior fixture doubles as the answer script for both paths
const behavior = JSON.parse(readFileSync(join(FIXTURES, 'scripted_google_2014.json'), 'utf-8')) as {
  answers: Record<string, { answer: string }>;
  manual_verdicts: Record<string, unknown>;
};
const ANSWERS: Record<string, string> = Object.fromEntries(
  Object.entries(behavior.answers).map(([qid, entry]) => [qid, entry.answer]),
);

let main: Server; // 3-minute budget, leaderboard seeded
let quick: Server; // 500 ms budget, for the lapsed-timer case

beforeAll(async () => {
  const storeMain = mkdtempSync(join(tmpdir(), 'uiq-ui-main-'));
  const seeded = spawnSync('uiq', [
    'score', '--from-matrix', join(FIXTURES, 'table2.json'), join(FIXTURES, 'table3.json'),
    '--store', storeMain, '--deterministic', '--run-id', 'published-2014',
  ]);
  expect(seeded.status).toBe(0);
  main = await startServer(storeMain, 180_000);
  quick = await startServer(mkdtempSync(join(tmpdir(), 'uiq-ui-quick-')), 500);
}, 60_000);

afterAll(() => {
  main?.proc.kill();
  quick?.proc.kill();
});

async function raw(base: string, method: string, path: string, body?: unknown) {
  const res = await fetch(base + path, {
    method,
    headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  return { status: res.status, data: await res.json().catch(() => null) };
}

async function driveUiSession(api: ApiClient): Promise<string> {
  let finished = false;
  const flow = new SessionFlow(api, {
    onQuestion: () => {},
    onFinished: () => {
      finished = true;
    },
    onNotice: () => {},
  });
  const sid = await flow.start('Equivalence Tester');
  while (!finished) {
    const view = flow.view;
    if (!view) break;
    await flow.submit(ANSWERS[view.question.id] ?? null);
  }
  return sid;
}

async function driveRawSession(base: string): Promise<string> {
  const created = await raw(base, 'POST', '/api/sessions', { subject_name: 'Equivalence Tester' });
  expect(created.status).toBe(201);
  const sid = created.data.session_id as string;
  for (;;) {
    const next = (await raw(base, 'GET', `/api/sessions/${sid}/next`)).data;
    if (next.done) break;
    const reply = await raw(base, 'POST', `/api/sessions/${sid}/answers`, {
      question_id: next.question.id,
      answer: ANSWERS[next.question.id] ?? null,
    });
    expect(reply.status).toBe(200);
  }
  return sid;
}

async function gradePendingAsFail(base: string, sessionId: string) {
  const queue = (await raw(base, 'GET', '/api/grading/queue')).data.items as {
    answer_id: string;
    session_id: string;
  }[];
  for (const item of queue) {
    if (item.session_id !== sessionId) continue;
    const reply = await raw(base, 'POST', `/api/grading/${item.answer_id}/verdict`, { pass: false });
    expect(reply.status).toBe(200);
  }
}

function comparable(transcript: { entries: { question_id: string; answer: { answer: string | null }; verdict: { state: string } }[] }) {
  return transcript.entries.map((e) => [e.question_id, e.answer.answer, e.verdict.state]);
}

describe('server equivalence', () => {
  it('UI flow and raw API replay produce identical transcripts and identical IQ', async () => {
    const api = new ApiClient(main.base);
    const uiSid = await driveUiSession(api);
    const rawSid = await driveRawSession(main.base);

    await gradePendingAsFail(main.base, uiSid);
    await gradePendingAsFail(main.base, rawSid);

    const uiTranscript = (await raw(main.base, 'GET', `/api/sessions/${uiSid}/transcript`)).data;
    const rawTranscript = (await raw(main.base, 'GET', `/api/sessions/${rawSid}/transcript`)).data;
    expect(comparable(uiTranscript)).toEqual(comparable(rawTranscript));

    const uiReport = (await raw(main.base, 'GET', `/api/sessions/${uiSid}/report`)).data;
    const rawReport = (await raw(main.base, 'GET', `/api/sessions/${rawSid}/report`)).data;
    expect(uiReport.status).toBe('complete');
    expect(uiReport.report.iq).toBe(rawReport.report.iq);
    expect(uiReport.report.vector).toEqual(rawReport.report.vector);

    // the scripted behavior reproduces the engine's published row on both paths
    expect(uiReport.report.vector.values).toEqual([100, 100, 100, 75, 100, 100, 0, 0, 0, 0, 0, 0, 100, 0, 0]);
    expect(uiReport.report.iq).toBe('26.50');
  }, 60_000);

  it('a lapsed UI timer yields a timeout verdict decided by the server clock', async () => {
    const api = new ApiClient(quick.base);
    let finished = false;
    const flow = new SessionFlow(api, {
      onQuestion: () => {},
      onFinished: () => {
        finished = true;
      },
      onNotice: () => {},
    });
    const sid = await flow.start('Sleepy Tester');
    expect(flow.view?.question.id).toBe('s01-q1');

    // user walks away; local countdown (seeded from the server budget) lapses
    await new Promise((r) => setTimeout(r, 700));
    const fired = await flow.tick(); // auto-submits an empty answer
    expect(fired).toBe(true);
    expect(finished).toBe(false);

    const transcript = (await raw(quick.base, 'GET', `/api/sessions/${sid}/transcript`)).data;
    expect(transcript.entries[0].verdict.state).toBe('timeout');
  }, 30_000);

  it('a question answered in time on the quick server grades normally', async () => {
    const api = new ApiClient(quick.base);
    const flow = new SessionFlow(api, { onQuestion: () => {}, onFinished: () => {}, onNotice: () => {} });
    const sid = await flow.start('Prompt Tester');
    await flow.submit('1+1=2');
    const transcript = (await raw(quick.base, 'GET', `/api/sessions/${sid}/transcript`)).data;
    expect(transcript.entries[0].verdict.state).toBe('correct');
  }, 30_000);
});

describe('leaderboard fidelity', () => {
  it('fixture run: 18Ages first at 97; engine rows have zero-width Innovation bars', async () => {
    const api = new ApiClient(main.base);
    const board = await api.leaderboard('published-2014');
    expect(board.entries.length).toBe(53);
    expect(board.entries[0].name).toBe('18Ages');
    expect(board.entries[0].iq).toBe('97');

    const html = renderLeaderboard(board);
    const engineRows = board.entries.filter((e) => e.region !== 'Human');
    expect(engineRows.length).toBe(50);
    for (const engine of engineRows) {
      expect(engine.categories.Innovation).toBe('0');
    }
    // rendered markup: every engine row carries an Innovation segment of width 0
    const rows = html.split('<tr').filter((chunk) => chunk.includes('data-subject-id'));
    const engineChunks = rows.filter((chunk) => !chunk.includes('>Human<'));
    expect(engineChunks.length).toBe(50);
    for (const chunk of engineChunks) {
      expect(chunk).toContain('data-cat="Innovation" style="width:0%"');
    }
    const humanChunk = rows.find((chunk) => chunk.includes('18Ages'))!;
    expect(humanChunk).toContain('data-cat="Innovation" style="width:60%"');
  }, 30_000);

  it('unknown run id surfaces as a 404', async () => {
    const reply = await raw(main.base, 'GET', '/api/leaderboard?run=ghost');
    expect(reply.status).toBe(404);
  });
});
