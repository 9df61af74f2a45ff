/** Thin typed client over the analysis HTTP API. All server access goes
 * through this module; the UI never recomputes analytics client-side. */

import type { AnalysisResult, SentenceEntry, SessionRecord } from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiRequestError(
        resp.status,
        body?.code ?? "unknown_error",
        body?.message ?? `request failed with status ${resp.status}`,
      );
    }
    return body as T;
  }

  getSentences(): Promise<SentenceEntry[]> {
    return this.request<SentenceEntry[]>("/api/sentences");
  }

  analyze(
    sessionId: string,
    sentenceId: string,
    audioBase64: string,
  ): Promise<AnalysisResult> {
    return this.request<AnalysisResult>("/api/analyze", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        session_id: sessionId,
        sentence_id: sentenceId,
        audio_base64: audioBase64,
      }),
    });
  }

  getSession(sessionId: string): Promise<SessionRecord> {
    return this.request<SessionRecord>(
      `/api/session/${encodeURIComponent(sessionId)}`,
    );
  }

  modelAudioUrl(sentenceId: string): string {
    return `${this.baseUrl}/api/model_audio/${encodeURIComponent(sentenceId)}`;
  }
}
