import { describe, expect, it } from 'vitest';

import { keyToAction } from '../src/keyboard';

describe('key mapping', () => {
  it('maps decision and navigation keys', () => {
    expect(keyToAction({ key: 'i' })).toBe('include');
    expect(keyToAction({ key: 'I' })).toBe('include');
    expect(keyToAction({ key: 'e' })).toBe('exclude');
    expect(keyToAction({ key: 'u' })).toBe('undo');
    expect(keyToAction({ key: 'ArrowRight' })).toBe('next');
    expect(keyToAction({ key: 'ArrowLeft' })).toBe('prev');
  });

  it('ignores unrelated keys and chords', () => {
    expect(keyToAction({ key: 'x' })).toBeNull();
    expect(keyToAction({ key: 'i', ctrlKey: true })).toBeNull();
    expect(keyToAction({ key: 'e', metaKey: true })).toBeNull();
  });
});
