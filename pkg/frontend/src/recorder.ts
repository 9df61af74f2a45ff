/** Microphone capture with pause/resume: paused stretches are simply not
 * captured, so stop() returns one contiguous buffer of the recorded
 * segments concatenated in order. WAV encoding is done client-side; the
 * server normalizes rate/length/amplitude, so capture-rate audio is sent
 * as-is with its true sample rate in the WAV header. */

export type RecordingState = "idle" | "recording" | "paused" | "analyzing";

export class RecorderError extends Error {
  constructor(
    public readonly code: "permission_denied" | "no_input_device" | "bad_state",
    message: string,
  ) {
    super(message);
  }
}

/** Anything that can push Float32 sample blocks at us (a live microphone
 * node or a test fixture). */
export interface SampleSource {
  start(onSamples: (block: Float32Array) => void): Promise<number>; // -> sample rate
  stop(): void;
}

export class Recorder {
  private segments: Float32Array[] = [];
  private sampleRate = 0;
  private capturing = false;
  private state: RecordingState = "idle";

  constructor(private readonly source: SampleSource) {}

  get recordingState(): RecordingState {
    return this.state;
  }

  async record(): Promise<void> {
    if (this.state !== "idle" && this.state !== "paused") {
      throw new RecorderError("bad_state", `cannot record from ${this.state}`);
    }
    if (!this.capturing) {
      this.sampleRate = await this.source.start((block) => {
        if (this.state === "recording") {
          this.segments.push(block.slice());
        }
      });
      this.capturing = true;
    }
    this.state = "recording";
  }

  pause(): void {
    if (this.state !== "recording") {
      throw new RecorderError("bad_state", `cannot pause from ${this.state}`);
    }
    this.state = "paused";
  }

  /** Concatenate every recorded segment into one buffer and reset. */
  stop(): { samples: Float32Array; sampleRate: number } {
    if (this.state !== "recording" && this.state !== "paused") {
      throw new RecorderError("bad_state", `cannot stop from ${this.state}`);
    }
    this.source.stop();
    this.capturing = false;
    this.state = "idle";
    const total = this.segments.reduce((n, s) => n + s.length, 0);
    const samples = new Float32Array(total);
    let off = 0;
    for (const seg of this.segments) {
      samples.set(seg, off);
      off += seg.length;
    }
    this.segments = [];
    return { samples, sampleRate: this.sampleRate };
  }
}

/** Live microphone source backed by getUserMedia + an audio worklet-free
 * ScriptProcessor pipeline (broadest browser support). */
export class MicrophoneSource implements SampleSource {
  private stream: MediaStream | null = null;
  private ctx: AudioContext | null = null;

  async start(onSamples: (block: Float32Array) => void): Promise<number> {
    if (!navigator.mediaDevices?.getUserMedia) {
      throw new RecorderError("no_input_device", "audio capture is not available");
    }
    try {
      this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    } catch (err) {
      throw new RecorderError(
        "permission_denied",
        "microphone access was denied — allow it in the browser and retry",
      );
    }
    this.ctx = new AudioContext();
    const input = this.ctx.createMediaStreamSource(this.stream);
    const proc = this.ctx.createScriptProcessor(4096, 1, 1);
    proc.onaudioprocess = (ev) => onSamples(ev.inputBuffer.getChannelData(0));
    input.connect(proc);
    proc.connect(this.ctx.destination);
    return this.ctx.sampleRate;
  }

  stop(): void {
    this.stream?.getTracks().forEach((t) => t.stop());
    void this.ctx?.close();
    this.stream = null;
    this.ctx = null;
  }
}

/** Encode mono float samples as a PCM16 WAV file, base64 for upload. */
export function encodeWavBase64(samples: Float32Array, sampleRate: number): string {
  const n = samples.length;
  const buf = new ArrayBuffer(44 + n * 2);
  const view = new DataView(buf);
  const writeStr = (off: number, s: string) => {
    for (let i = 0; i < s.length; i++) view.setUint8(off + i, s.charCodeAt(i));
  };
  writeStr(0, "RIFF");
  view.setUint32(4, 36 + n * 2, true);
  writeStr(8, "WAVE");
  writeStr(12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeStr(36, "data");
  view.setUint32(40, n * 2, true);
  for (let i = 0; i < n; i++) {
    const x = Math.max(-1, Math.min(1, samples[i]));
    view.setInt16(44 + i * 2, Math.round(x * 32767), true);
  }
  const bytes = new Uint8Array(buf);
  let bin = "";
  const step = 0x8000;
  for (let i = 0; i < bytes.length; i += step) {
    bin += String.fromCharCode(...bytes.subarray(i, i + step));
  }
  return btoa(bin);
}
