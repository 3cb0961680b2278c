// Session flow state machine: start or resume, show one question at a
// time, submit on entry, auto-submit empty when the local countdown lapses.
// All verdicts and elapsed times are the server's; a 409 on submit means
// the question was already answered (another tab, a retry after a blip),
// and the flow just moves on to the server's current head question.

import { ApiClient, ApiError, NextResponse, QuestionView } from './api.js';
import { Countdown } from './timer.js';

export interface FlowView {
  question: QuestionView;
  index: number;
  total: number;
  countdown: Countdown;
}

export interface FlowCallbacks {
  onQuestion(view: FlowView): void;
  onFinished(status: string): void;
  onNotice(message: string): void;
}

export class SessionFlow {
  sessionId: string | null = null;
  private current: FlowView | null = null;
  private submitting = false;

  constructor(
    private api: ApiClient,
    private callbacks: FlowCallbacks,
    private now: () => number = () => Date.now(),
  ) {}

  async start(subjectName: string, group = ''): Promise<string> {
    const summary = await this.api.createSession(subjectName, group);
    this.sessionId = summary.session_id;
    await this.advance();
    return summary.session_id;
  }

  /** Re-attach to a session after a reload; the server timer never stopped. */
  async resume(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.advance();
  }

  get view(): FlowView | null {
    return this.current;
  }

  private async advance(): Promise<void> {
    if (!this.sessionId) throw new Error('no session');
    const next: NextResponse = await this.api.nextQuestion(this.sessionId);
    if (next.done || !next.question) {
      this.current = null;
      this.callbacks.onFinished(next.status ?? 'complete');
      return;
    }
    this.current = {
      question: next.question,
      index: next.index ?? 0,
      total: next.total ?? 0,
      countdown: new Countdown(next.remaining_ms ?? 0, this.now()),
    };
    this.callbacks.onQuestion(this.current);
  }

  async submit(answer: string | null): Promise<void> {
    if (!this.sessionId || !this.current || this.submitting) return;
    this.submitting = true;
    const questionId = this.current.question.id;
    try {
      await this.api.submitAnswer(this.sessionId, questionId, answer);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.callbacks.onNotice('already answered; moving on');
      } else {
        throw err;
      }
    } finally {
      this.submitting = false;
    }
    await this.advance();
  }

  /**
   * Drive from a UI tick. When the advisory countdown lapses, submit an
   * empty answer; the server's clock then records the authoritative
   * timeout verdict.
   */
  async tick(): Promise<boolean> {
    if (!this.current) return false;
    if (this.current.countdown.expired(this.now())) {
      this.callbacks.onNotice('time is up on this question');
      await this.submit(null);
      return true;
    }
    return false;
  }
}
