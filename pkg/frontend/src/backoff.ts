// Reconnect backoff mirroring the transport contract: base 100 ms
// doubling per attempt, capped at 30 s.

export const BACKOFF_BASE_MS = 100;
export const BACKOFF_CAP_MS = 30_000;

export function nextBackoffMs(attempt: number): number {
  if (attempt < 0) {
    throw new Error("attempt must be >= 0");
  }
  return Math.min(BACKOFF_BASE_MS * 2 ** attempt, BACKOFF_CAP_MS);
}
