import { ApiClient } from "./api.js";
import type { AgreementResponse } from "./types.js";

export const SUBSTANTIAL_THRESHOLD = 0.6;

/** Qualitative reading of a kappa value; above 0.6 counts as substantial. */
export function kappaBand(value: number): string {
  if (value > 0.8) return "almost perfect";
  if (value > SUBSTANTIAL_THRESHOLD) return "substantial";
  if (value > 0.4) return "moderate";
  if (value > 0.2) return "fair";
  return "slight";
}

/**
 * Polls the agreement endpoint.  Numbers are relayed exactly as the server
 * reported them; nothing is recomputed client side.
 */
export class AgreementPoller {
  latest: AgreementResponse | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private listeners: Array<(a: AgreementResponse) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sampleId: string,
    private readonly intervalMs = 2000,
  ) {}

  onUpdate(fn: (a: AgreementResponse) => void): void {
    this.listeners.push(fn);
  }

  async poll(): Promise<AgreementResponse> {
    const res = await this.api.agreement(this.sampleId);
    this.latest = res;
    for (const fn of this.listeners) fn(res);
    return res;
  }

  start(): void {
    const tick = async () => {
      try {
        await this.poll();
      } catch {
        // transient failure; the next tick retries
      }
      this.timer = setTimeout(tick, this.intervalMs);
    };
    void tick();
  }

  stop(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
