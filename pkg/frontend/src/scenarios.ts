/**
 * Scripted parameter scenarios: deterministic ramps that stand in for
 * hand-tracking input when testing adaptations in the designer.
 */

export interface RampStep {
  param: string;
  from: number;
  to: number;
  seconds: number;
}

export interface Scenario {
  name: string;
  steps: RampStep[];
}

export const BUILTIN_SCENARIOS: Scenario[] = [
  {
    // approach the widget, then press it home
    name: "button press",
    steps: [
      { param: "proximity", from: 0, to: 1, seconds: 1.0 },
      { param: "activation", from: 0, to: 1, seconds: 0.8 },
    ],
  },
  {
    name: "rain burst",
    steps: [
      { param: "rainfall_amount", from: 0, to: 1, seconds: 1.5 },
      { param: "droplet_strength", from: 0.2, to: 0.9, seconds: 1.0 },
      { param: "rainfall_amount", from: 1, to: 0.1, seconds: 2.0 },
    ],
  },
];

/**
 * Run a scenario by emitting ~60 updates/second per ramp through `emit`.
 * Returns a cancel function.
 */
export function runScenario(
  scenario: Scenario,
  emit: (param: string, value: number) => void,
  done?: () => void,
  tickMs = 1000 / 60,
): () => void {
  let cancelled = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const runStep = (index: number) => {
    if (cancelled) return;
    const step = scenario.steps[index];
    if (!step) {
      done?.();
      return;
    }
    const ticks = Math.max(1, Math.round((step.seconds * 1000) / tickMs));
    let tick = 0;
    const advance = () => {
      if (cancelled) return;
      tick += 1;
      const alpha = Math.min(1, tick / ticks);
      emit(step.param, step.from + (step.to - step.from) * alpha);
      if (alpha >= 1) {
        runStep(index + 1);
      } else {
        timer = setTimeout(advance, tickMs);
      }
    };
    advance();
  };

  runStep(0);
  return () => {
    cancelled = true;
    if (timer !== null) clearTimeout(timer);
  };
}
