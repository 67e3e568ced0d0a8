// Streamed-frame playback: frames queue up as they arrive and are delivered
// to the renderer at a paced rate. The frame index is monotone and never
// passes the number of frames received.

export interface FrameSink<F> {
  render(frame: F, index: number): void;
}

export class Playback<F> {
  private frames: F[] = [];
  private next = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  readonly fps: number;

  constructor(
    private sink: FrameSink<F>,
    fps = 10,
    private schedule: typeof setInterval = setInterval,
    private cancel: typeof clearInterval = clearInterval,
  ) {
    if (fps < 5) throw new Error(`playback must sustain >= 5 fps, got ${fps}`);
    this.fps = fps;
  }

  get received(): number {
    return this.frames.length;
  }

  get position(): number {
    return this.next;
  }

  get playing(): boolean {
    return this.timer !== null;
  }

  push(frame: F): void {
    this.frames.push(frame);
  }

  /** Drain one frame if available; returns whether a frame was rendered. */
  tick(): boolean {
    if (this.next >= this.frames.length) return false;
    const frame = this.frames[this.next]!;
    this.sink.render(frame, this.next);
    this.next += 1;
    return true;
  }

  play(): void {
    if (this.timer !== null) return;
    this.timer = this.schedule(() => this.tick(), 1000 / this.fps);
  }

  pause(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
  }

  /** Jump to a received frame (scrubbing); index is clamped, order preserved. */
  seek(index: number): void {
    const clamped = Math.max(0, Math.min(this.frames.length - 1, index));
    if (this.frames.length === 0) return;
    this.next = clamped;
    this.tick();
  }

  reset(): void {
    this.pause();
    this.frames = [];
    this.next = 0;
  }
}
