export type KeyAction = 'include' | 'exclude' | 'undo' | 'next' | 'prev' | null;

interface KeyEventLike {
  key: string;
  target?: unknown;
  metaKey?: boolean;
  ctrlKey?: boolean;
  altKey?: boolean;
}

function isTextInput(target: unknown): boolean {
  return (
    typeof HTMLInputElement !== 'undefined' && target instanceof HTMLInputElement
  ) || (
    typeof HTMLTextAreaElement !== 'undefined' && target instanceof HTMLTextAreaElement
  );
}

/** I=include, E=exclude, U=undo-last, arrows navigate. */
export function keyToAction(event: KeyEventLike): KeyAction {
  if (event.metaKey || event.ctrlKey || event.altKey) return null;
  if (isTextInput(event.target)) return null;
  switch (event.key) {
    case 'i':
    case 'I':
      return 'include';
    case 'e':
    case 'E':
      return 'exclude';
    case 'u':
    case 'U':
      return 'undo';
    case 'ArrowDown':
    case 'ArrowRight':
      return 'next';
    case 'ArrowUp':
    case 'ArrowLeft':
      return 'prev';
    default:
      return null;
  }
}
