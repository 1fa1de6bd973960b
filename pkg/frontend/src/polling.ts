// Interval polling with overlap protection: a tick is skipped while the
// previous one is still in flight, and errors go to the handler instead of
// killing the loop.

export interface PollHandle {
  stop: () => void;
  tick: () => Promise<void>;
}

export function startPolling(
  fn: () => Promise<void>,
  intervalMs = 5000,
  onError: (err: unknown) => void = () => {},
): PollHandle {
  let inFlight = false;
  let stopped = false;

  const tick = async () => {
    if (inFlight || stopped) return;
    inFlight = true;
    try {
      await fn();
    } catch (err) {
      onError(err);
    } finally {
      inFlight = false;
    }
  };

  const timer = setInterval(tick, intervalMs);
  void tick();
  return {
    stop: () => {
      stopped = true;
      clearInterval(timer);
    },
    tick,
  };
}
