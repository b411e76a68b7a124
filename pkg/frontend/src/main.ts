import { ReviewApi } from './api';
import { ReviewController, ViewState } from './controller';
import { keyToAction } from './keyboard';
import { clampTau, previewQueueSize } from './threshold';
import type { Digest } from './types';

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('service') ?? 'http://127.0.0.1:8000';
const reviewer = params.get('reviewer') ?? undefined;

const api = new ReviewApi(baseUrl);
const controller = new ReviewController(api, reviewer);

const root = document.getElementById('app') as HTMLElement;
let latestDigest: Digest | null = null;

function esc(text: string): string {
  const div = document.createElement('div');
  div.textContent = text;
  return div.innerHTML;
}

function render(state: ViewState): void {
  const card = state.cards[state.focusIndex];
  const sections: string[] = [];

  if (state.banner) {
    sections.push(`<div class="banner">${esc(state.banner)}
      <button id="retry">Retry</button></div>`);
  }
  if (state.toast) {
    sections.push(`<div class="toast">${esc(state.toast)}</div>`);
  }

  sections.push(`<div class="stats">
    reviewed this session: <b>${state.reviewedThisSession}</b>
    &middot; remaining: <b>${state.remaining}</b>
    &middot; avg s/decision: <b>${
      state.averageSecondsPerDecision === null
        ? '–'
        : state.averageSecondsPerDecision.toFixed(1)
    }</b></div>`);

  if (state.allCaughtUp) {
    sections.push('<div class="done">All caught up. Nothing needs review.</div>');
  } else if (card) {
    sections.push(`<div class="card">
      <div class="meta">#${card.position} of ${state.remaining}
        &middot; model says <b>${card.verdict}</b>
        &middot; confidence ${(card.confidence * 100).toFixed(1)}%</div>
      <h2>${esc(card.title)}</h2>
      <div class="abstract">${esc(card.abstract)}</div>
      <div class="hint">I = include &middot; E = exclude &middot; U = undo last
        &middot; arrows navigate</div>
    </div>`);
  }

  sections.push(`<div class="threshold">
    <label>review threshold
      <input type="range" id="tau" min="0.5" max="1.0" step="0.01"
             value="${latestDigest?.tau ?? 0.75}">
    </label>
    <span id="tau-preview"></span>
    <button id="tau-commit">Apply</button>
  </div>`);

  root.innerHTML = sections.join('\n');

  document.getElementById('retry')?.addEventListener('click', () => controller.refresh());
  const slider = document.getElementById('tau') as HTMLInputElement | null;
  const preview = document.getElementById('tau-preview');
  if (slider && preview) {
    const update = async () => {
      if (latestDigest === null) latestDigest = await controller.stats();
      const p = previewQueueSize(clampTau(Number(slider.value)), state.cards, latestDigest);
      preview.textContent = `${p.exact ? '' : '≥ '}${p.queued} queued at ${Number(slider.value).toFixed(2)}`;
    };
    slider.addEventListener('input', update);
    void update();
  }
  document.getElementById('tau-commit')?.addEventListener('click', async () => {
    if (slider) {
      await controller.commitThreshold(clampTau(Number(slider.value)));
      latestDigest = await controller.stats();
    }
  });
}

controller.subscribe(render);

document.addEventListener('keydown', (event) => {
  const action = keyToAction(event);
  if (action === null) return;
  event.preventDefault();
  switch (action) {
    case 'include':
      void controller.decide('include');
      break;
    case 'exclude':
      void controller.decide('exclude');
      break;
    case 'undo':
      controller.undo();
      break;
    case 'next':
      controller.next();
      break;
    case 'prev':
      controller.prev();
      break;
  }
});

void (async () => {
  latestDigest = await api.getStats().catch(() => null);
  await controller.refresh();
})();
