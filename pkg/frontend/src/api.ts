// Typed client for the harness service API. The UI computes nothing itself:
// every number shown to the user comes out of these endpoints.

export interface SessionSummary {
  session_id: string;
  subject: { id: string; display_name: string; group: string; region: string };
  status: 'in_progress' | 'pending_grading' | 'complete';
  answered: number;
  total: number;
  pending_manual: number;
  timeout_ms: number;
}

export interface QuestionView {
  id: string;
  prompt: string;
  prompt_modality: 'text' | 'audio' | 'image';
  response_modality: 'text' | 'audio' | 'image';
  language: string;
  subtest: number;
  prompt_asset_url?: string;
}

export interface NextResponse {
  done: boolean;
  status?: string;
  question?: QuestionView;
  index?: number;
  total?: number;
  remaining_ms?: number;
  timeout_ms?: number;
}

export interface AnswerResponse {
  question_id: string;
  verdict: string;
  answered: number;
  total: number;
  status: string;
}

export interface ReportPayload {
  subject: { id: string; display_name: string; group: string; region: string };
  vector: { scale_id: string; values: number[] };
  iq: string;
  categories: Record<string, string>;
}

export interface ReportResponse {
  status: string;
  pending_manual?: number;
  answered?: number;
  total?: number;
  report?: ReportPayload;
}

export interface GradingItem {
  answer_id: string;
  session_id: string;
  question_id: string;
  prompt: string;
  rubric: string;
  answer: string | null;
}

export interface LeaderboardEntry {
  rank: number;
  subject_id: string;
  name: string;
  group: string;
  region: string;
  iq: string;
  categories: Record<string, string>;
}

export interface LeaderboardResponse {
  run_id: string | null;
  entries: LeaderboardEntry[];
}

export interface RunInfo {
  run_id: string;
  label: string;
  created_at_ms: number;
  subjects: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = '') {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const data = text ? JSON.parse(text) : null;
    if (!res.ok) {
      const detail = data && data.detail ? JSON.stringify(data.detail) : res.statusText;
      throw new ApiError(res.status, detail);
    }
    return data as T;
  }

  createSession(subjectName: string, group = ''): Promise<SessionSummary> {
    return this.request('POST', '/api/sessions', { subject_name: subjectName, group });
  }

  sessionState(sessionId: string): Promise<SessionSummary> {
    return this.request('GET', `/api/sessions/${sessionId}`);
  }

  nextQuestion(sessionId: string): Promise<NextResponse> {
    return this.request('GET', `/api/sessions/${sessionId}/next`);
  }

  submitAnswer(sessionId: string, questionId: string, answer: string | null): Promise<AnswerResponse> {
    return this.request('POST', `/api/sessions/${sessionId}/answers`, {
      question_id: questionId,
      answer,
    });
  }

  report(sessionId: string): Promise<ReportResponse> {
    return this.request('GET', `/api/sessions/${sessionId}/report`);
  }

  gradingQueue(): Promise<{ items: GradingItem[] }> {
    return this.request('GET', '/api/grading/queue');
  }

  submitVerdict(answerId: string, pass: boolean, note = ''): Promise<unknown> {
    return this.request('POST', `/api/grading/${answerId}/verdict`, { pass, note });
  }

  leaderboard(runId?: string): Promise<LeaderboardResponse> {
    const suffix = runId ? `?run=${encodeURIComponent(runId)}` : '';
    return this.request('GET', `/api/leaderboard${suffix}`);
  }

  runs(): Promise<{ runs: RunInfo[] }> {
    return this.request('GET', '/api/runs');
  }
}
