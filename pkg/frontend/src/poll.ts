import type { ApiClient } from './api.js';
import type { SessionStatus } from './types.js';

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll the fit status until it leaves the `fitting` state. Resolves with the
 * terminal status when ready, rejects when the fit failed. `onUpdate` fires
 * on every poll so the import panel can show live epoch/loss progress.
 */
export async function pollUntilReady(
  api: ApiClient,
  sessionId: string,
  onUpdate?: (status: SessionStatus) => void,
  intervalMs = 500,
  timeoutMs = 600_000,
): Promise<SessionStatus> {
  const t0 = Date.now();
  for (;;) {
    const status = await api.status(sessionId);
    onUpdate?.(status);
    if (status.state === 'ready') return status;
    if (status.state === 'failed') {
      throw new Error(status.error ? `${status.error.code}: ${status.error.message}` : 'fit failed');
    }
    if (Date.now() - t0 > timeoutMs) {
      throw new Error('fit timed out');
    }
    await sleep(intervalMs);
  }
}
