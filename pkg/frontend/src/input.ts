// Maps held keys / pointer drag into one action per tick. Components combine
// and clamp exactly as the simulator would, so the server never rejects.

export interface PointerDrag {
  // Workspace-coordinate target the pointer is dragging toward.
  targetX: number;
  targetY: number;
  // Current end-effector position in workspace coordinates.
  eeX: number;
  eeY: number;
}

const KEY_VECTORS: Record<string, [number, number]> = {
  ArrowRight: [1, 0],
  ArrowLeft: [-1, 0],
  ArrowUp: [0, -1], // canvas y grows downward; workspace y matches canvas here
  ArrowDown: [0, 1],
  KeyD: [1, 0],
  KeyA: [-1, 0],
  KeyW: [0, -1],
  KeyS: [0, 1],
};

export function clamp(value: number, bound: number): number {
  return Math.min(bound, Math.max(-bound, value));
}

export function keysToAction(pressed: ReadonlySet<string>, aMax: number): [number, number] {
  let dx = 0;
  let dy = 0;
  for (const code of pressed) {
    const vec = KEY_VECTORS[code];
    if (!vec) continue;
    dx += vec[0];
    dy += vec[1];
  }
  return [clamp(dx * aMax, aMax), clamp(dy * aMax, aMax)];
}

export function dragToAction(drag: PointerDrag, aMax: number): [number, number] {
  return [clamp(drag.targetX - drag.eeX, aMax), clamp(drag.targetY - drag.eeY, aMax)];
}

export function isZero(action: [number, number]): boolean {
  return action[0] === 0 && action[1] === 0;
}

// One action per tick: pointer drag wins over keys when both are active.
export function tickAction(
  pressed: ReadonlySet<string>,
  drag: PointerDrag | null,
  aMax: number,
): [number, number] {
  if (drag) return dragToAction(drag, aMax);
  return keysToAction(pressed, aMax);
}
