/** Page controller: wires sentence selection, the recorder, and the
 * rendering modules to the HTTP API. All analytics come from the server;
 * the controller only moves payloads into the DOM. */

import { ApiClient, ApiRequestError } from "./api.js";
import { Recorder, RecorderError, encodeWavBase64 } from "./recorder.js";
import type { SampleSource } from "./recorder.js";
import { renderScatter, renderScore, renderWaveform } from "./render.js";
import {
  PracticeViewState,
  applyError,
  applyResult,
  canAnalyze,
  initialState,
} from "./state.js";

export class PracticeApp {
  state: PracticeViewState = initialState();
  private recorder: Recorder;
  private captured: { samples: Float32Array; sampleRate: number } | null = null;
  private inFlight = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    source: SampleSource,
    private readonly sessionId: string = `session-${Date.now()}`,
  ) {
    this.recorder = new Recorder(source);
    this.root.innerHTML = `
      <div class="sentence-bar">
        <select class="sentence-select"></select>
        <audio class="model-audio" controls></audio>
      </div>
      <div class="controls">
        <button class="btn-record">Record</button>
        <button class="btn-pause" disabled>Pause</button>
        <button class="btn-stop" disabled>Stop</button>
        <button class="btn-analyze" disabled>Analyze</button>
      </div>
      <div class="error-banner" hidden></div>
      <div class="score-panel"></div>
      <div class="waveform-panel"></div>
      <div class="scatter-panel"></div>`;
    this.wireControls();
  }

  async init(): Promise<void> {
    this.state.sentences = await this.api.getSentences();
    const select = this.query<HTMLSelectElement>(".sentence-select");
    select.innerHTML = this.state.sentences
      .map((s) => `<option value="${s.sentence_id}">${s.text}</option>`)
      .join("");
    if (this.state.sentences.length > 0) {
      this.selectSentence(this.state.sentences[0].sentence_id);
    }
  }

  selectSentence(sentenceId: string): void {
    this.state.selectedSentenceId = sentenceId;
    this.query<HTMLSelectElement>(".sentence-select").value = sentenceId;
    const entry = this.state.sentences.find((s) => s.sentence_id === sentenceId);
    const audio = this.query<HTMLAudioElement>(".model-audio");
    if (entry?.has_model_audio) {
      audio.src = this.api.modelAudioUrl(sentenceId);
      audio.hidden = false;
    } else {
      audio.removeAttribute("src");
      audio.hidden = true;
    }
  }

  async startRecording(): Promise<void> {
    try {
      await this.recorder.record();
      this.state.recordingState = this.recorder.recordingState;
      this.state.errorMessage = null;
    } catch (err) {
      this.showError(err instanceof RecorderError ? err.message : String(err));
    }
    this.syncControls();
  }

  pauseRecording(): void {
    this.recorder.pause();
    this.state.recordingState = this.recorder.recordingState;
    this.syncControls();
  }

  stopRecording(): void {
    this.captured = this.recorder.stop();
    this.state.recordingState = "idle";
    this.syncControls();
  }

  /** Upload the captured buffer (or an injected fixture) for analysis. */
  async submitRecording(fixture?: {
    samples: Float32Array;
    sampleRate: number;
  }): Promise<void> {
    const capture = fixture ?? this.captured;
    const nSamples = capture?.samples.length ?? 0;
    if (
      this.inFlight ||
      capture === null ||
      !canAnalyze(this.state, nSamples) ||
      this.state.selectedSentenceId === null
    ) {
      return;
    }
    this.inFlight = true;
    this.state.recordingState = "analyzing";
    this.syncControls();
    try {
      const result = await this.api.analyze(
        this.sessionId,
        this.state.selectedSentenceId,
        encodeWavBase64(capture.samples, capture.sampleRate),
      );
      this.state = applyResult(this.state, result);
      this.renderResult();
    } catch (err) {
      const message =
        err instanceof ApiRequestError ? `${err.code}: ${err.message}` : String(err);
      this.state = applyError(this.state, message);
      this.showError(message);
    } finally {
      this.inFlight = false;
      this.captured = fixture ? this.captured : null;
      this.syncControls();
    }
  }

  private renderResult(): void {
    const result = this.state.latestResult;
    if (!result) return;
    this.query<HTMLElement>(".error-banner").hidden = true;
    renderScore(this.query(".score-panel"), result);
    renderWaveform(this.query(".waveform-panel"), result.waveform_preview, result.segments);
    renderScatter(
      this.query(".scatter-panel"),
      result.point,
      this.state.trajectory,
      this.state.scaleRadius,
    );
  }

  private showError(message: string): void {
    this.state.errorMessage = message;
    const banner = this.query<HTMLElement>(".error-banner");
    banner.textContent = message;
    banner.hidden = false;
  }

  private syncControls(): void {
    const s = this.state.recordingState;
    this.query<HTMLButtonElement>(".btn-record").disabled =
      s === "recording" || s === "analyzing";
    this.query<HTMLButtonElement>(".btn-pause").disabled = s !== "recording";
    this.query<HTMLButtonElement>(".btn-stop").disabled =
      s !== "recording" && s !== "paused";
    this.query<HTMLButtonElement>(".btn-analyze").disabled =
      !canAnalyze(this.state, this.captured?.samples.length ?? 0);
  }

  private wireControls(): void {
    this.query(".sentence-select").addEventListener("change", (ev) =>
      this.selectSentence((ev.target as HTMLSelectElement).value),
    );
    this.query(".btn-record").addEventListener("click", () => void this.startRecording());
    this.query(".btn-pause").addEventListener("click", () => this.pauseRecording());
    this.query(".btn-stop").addEventListener("click", () => this.stopRecording());
    this.query(".btn-analyze").addEventListener("click", () => void this.submitRecording());
  }

  private query<T extends Element = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el;
  }
}
