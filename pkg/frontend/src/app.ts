import { ApiClient, ApiError } from './api.js';
import { draftFromClicks, validateDraft, type CalibrationDraft } from './calibration.js';
import { rasterizeBand, type Point } from './geometry.js';
import { mergeRecord, submitReview } from './gallery.js';
import { errorEntries, flippedVerdicts, violationCount } from './tuning.js';
import type { Camera, RedetectResult, ViolationRecord, ViolationStatus } from './types.js';

const api = new ApiClient('');

interface AppState {
  cameras: Camera[];
  camera: Camera | null;
  panIndex: number;
  clicks: Point[];
  draft: CalibrationDraft | null;
  baseline: RedetectResult[] | null;
  gallery: ViolationRecord[];
  galleryStatus: ViolationStatus;
  galleryPage: number;
  galleryPages: number;
}

const state: AppState = {
  cameras: [],
  camera: null,
  panIndex: 0,
  clicks: [],
  draft: null,
  baseline: null,
  gallery: [],
  galleryStatus: 'pending',
  galleryPage: 1,
  galleryPages: 1,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const bar = el<HTMLDivElement>('status');
  bar.textContent = text;
  bar.className = isError ? 'status error' : 'status';
}

function describe(e: unknown): string {
  if (e instanceof ApiError) return `${e.code}: ${e.message}`;
  return e instanceof Error ? e.message : String(e);
}

// --- tabs ---------------------------------------------------------------

function showTab(name: string): void {
  for (const section of document.querySelectorAll<HTMLElement>('.tab-panel')) {
    section.hidden = section.dataset['tab'] !== name;
  }
  for (const btn of document.querySelectorAll<HTMLButtonElement>('.tab-button')) {
    btn.classList.toggle('active', btn.dataset['tab'] === name);
  }
  if (name === 'review') void refreshGallery();
}

// --- camera / pan selection ----------------------------------------------

async function loadCameras(): Promise<void> {
  state.cameras = await api.listCameras();
  const select = el<HTMLSelectElement>('camera-select');
  select.innerHTML = '';
  for (const cam of state.cameras) {
    const opt = document.createElement('option');
    opt.value = cam.camera_id;
    opt.textContent = `${cam.camera_id} (${cam.location_label || cam.kind})`;
    select.appendChild(opt);
  }
  if (state.cameras.length > 0) selectCamera(state.cameras[0]!.camera_id);
}

function selectCamera(cameraId: string): void {
  state.camera = state.cameras.find((c) => c.camera_id === cameraId) ?? null;
  state.panIndex = state.camera?.pan_presets[0]?.pan_index ?? 0;
  state.clicks = [];
  state.draft = null;
  state.baseline = null;
  const pans = el<HTMLSelectElement>('pan-select');
  pans.innerHTML = '';
  for (const preset of state.camera?.pan_presets ?? []) {
    const opt = document.createElement('option');
    opt.value = String(preset.pan_index);
    opt.textContent = `pan ${preset.pan_index}`;
    pans.appendChild(opt);
  }
  renderThresholds();
  void redrawCalibration();
}

function renderThresholds(): void {
  if (!state.camera) return;
  el<HTMLInputElement>('d-th').value = String(state.camera.d_th);
  el<HTMLInputElement>('l-th').value = String(state.camera.l_th);
  el<HTMLInputElement>('pixel-th').value = String(state.camera.pixel_th);
  el<HTMLSpanElement>('d-th-value').textContent = String(state.camera.d_th);
  el<HTMLSpanElement>('l-th-value').textContent = String(state.camera.l_th);
  el<HTMLSpanElement>('pixel-th-value').textContent = String(state.camera.pixel_th);
}

// --- calibration ----------------------------------------------------------

async function redrawCalibration(): Promise<void> {
  const cam = state.camera;
  if (!cam) return;
  const canvas = el<HTMLCanvasElement>('calib-canvas');
  canvas.width = cam.frame_width;
  canvas.height = cam.frame_height;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.fillStyle = '#222';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  try {
    const img = await loadImage(api.backgroundUrl(cam.camera_id, state.panIndex));
    ctx.drawImage(img, 0, 0);
  } catch {
    ctx.fillStyle = '#ccc';
    ctx.fillText('no background checkpoint yet', 20, 30);
  }
  const preset = cam.pan_presets.find((p) => p.pan_index === state.panIndex);
  if (preset) drawBand(ctx, rasterizeBand(preset.geometry), 'rgba(80, 200, 255, 0.8)');
  if (state.draft) drawBand(ctx, rasterizeBand(state.draft.geometry), 'rgba(255, 200, 0, 0.9)');
  for (const [x, y] of state.clicks) {
    ctx.fillStyle = '#ff5050';
    ctx.fillRect(x - 2, y - 2, 5, 5);
  }
}

function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`failed to load ${url}`));
    img.src = url;
  });
}

function drawBand(ctx: CanvasRenderingContext2D, lines: Point[][], color: string): void {
  ctx.fillStyle = color;
  for (const line of lines) {
    for (const [x, y] of line) ctx.fillRect(x, y, 1, 1);
  }
}

function onCanvasClick(ev: MouseEvent): void {
  const cam = state.camera;
  if (!cam) return;
  const canvas = el<HTMLCanvasElement>('calib-canvas');
  const rect = canvas.getBoundingClientRect();
  const x = Math.round(((ev.clientX - rect.left) / rect.width) * canvas.width);
  const y = Math.round(((ev.clientY - rect.top) / rect.height) * canvas.height);
  state.clicks.push([x, y]);
  if (state.clicks.length > 2) state.clicks = [[x, y]];
  if (state.clicks.length === 2) {
    const [a, b] = state.clicks as [Point, Point];
    state.draft = draftFromClicks(cam.camera_id, state.panIndex, a, b);
    const apply = el<HTMLButtonElement>('apply-calibration');
    if (!state.draft) {
      setStatus('clicks must have horizontal extent', true);
      apply.disabled = true;
    } else {
      const check = validateDraft(state.draft, cam.frame_width, cam.frame_height);
      apply.disabled = !check.ok;
      setStatus(
        check.ok
          ? `draft: anchor (${state.draft.geometry.anchor_x}, ${state.draft.geometry.anchor_y}), ` +
              `length ${state.draft.geometry.length}, skew ${state.draft.geometry.skew_deg.toFixed(2)} deg`
          : check.message ?? 'invalid draft',
        !check.ok,
      );
    }
  }
  void redrawCalibration();
}

async function applyCalibration(): Promise<void> {
  const cam = state.camera;
  const draft = state.draft;
  if (!cam || !draft) return;
  try {
    // server-side dry run first; its band is authoritative for the preview
    await api.calibrationDryRun(draft.geometry, cam.frame_width, cam.frame_height);
    const updated = await api.patchConfig(cam.camera_id, draft.pan_index, { geometry: draft.geometry });
    state.cameras = state.cameras.map((c) => (c.camera_id === updated.camera_id ? updated : c));
    state.camera = updated;
    state.clicks = [];
    state.draft = null;
    el<HTMLButtonElement>('apply-calibration').disabled = true;
    setStatus(`calibration applied to ${cam.camera_id}/pan ${draft.pan_index}`);
    await redrawCalibration();
  } catch (e) {
    setStatus(describe(e), true);
  }
}

// --- threshold tuning -------------------------------------------------------

async function loadTuningWindow(): Promise<string[]> {
  const cam = state.camera;
  if (!cam) return [];
  // last 50 foreground frames: violations plus near-misses
  const [violations, misses] = await Promise.all([
    api.listFrames({ camera: cam.camera_id, pan: state.panIndex, event: 'violation', limit: 50 }),
    api.listFrames({ camera: cam.camera_id, pan: state.panIndex, event: 'no_violation', limit: 50 }),
  ]);
  return violations
    .concat(misses)
    .sort((a, b) => a.sequence_no - b.sequence_no)
    .slice(-50)
    .map((f) => f.frame_id);
}

async function previewThresholds(): Promise<void> {
  const cam = state.camera;
  if (!cam) return;
  const overrides = {
    d_th: Number(el<HTMLInputElement>('d-th').value),
    l_th: Number(el<HTMLInputElement>('l-th').value),
    pixel_th: Number(el<HTMLInputElement>('pixel-th').value),
  };
  el<HTMLSpanElement>('d-th-value').textContent = String(overrides.d_th);
  el<HTMLSpanElement>('l-th-value').textContent = String(overrides.l_th);
  el<HTMLSpanElement>('pixel-th-value').textContent = String(overrides.pixel_th);
  try {
    const frameIds = await loadTuningWindow();
    if (frameIds.length === 0) {
      el<HTMLDivElement>('tuning-result').textContent = 'no processed foreground frames yet';
      return;
    }
    if (!state.baseline) {
      state.baseline = await api.redetect({ frame_ids: frameIds });
    }
    const results = await api.redetect({ frame_ids: frameIds, override_thresholds: overrides });
    const flips = flippedVerdicts(state.baseline, results);
    const errors = errorEntries(results);
    const parts = [
      `${violationCount(results)}/${results.length} frames violate under the draft thresholds`,
      `${flips.length} verdicts differ from stored records`,
    ];
    if (errors.length > 0) parts.push(`${errors.length} frames could not be re-scored`);
    el<HTMLDivElement>('tuning-result').textContent = parts.join(' | ');
    const list = el<HTMLUListElement>('flip-list');
    list.innerHTML = '';
    for (const flip of flips.slice(0, 20)) {
      const li = document.createElement('li');
      li.textContent = `${flip.frame_id}: ${flip.before ? 'violation' : 'clear'} -> ${flip.after ? 'violation' : 'clear'}`;
      list.appendChild(li);
    }
  } catch (e) {
    setStatus(describe(e), true);
  }
}

async function applyThresholds(): Promise<void> {
  const cam = state.camera;
  if (!cam) return;
  try {
    const updated = await api.patchConfig(cam.camera_id, state.panIndex, {
      d_th: Number(el<HTMLInputElement>('d-th').value),
      l_th: Number(el<HTMLInputElement>('l-th').value),
      pixel_th: Number(el<HTMLInputElement>('pixel-th').value),
    });
    state.cameras = state.cameras.map((c) => (c.camera_id === updated.camera_id ? updated : c));
    state.camera = updated;
    state.baseline = null;
    renderThresholds();
    setStatus(`thresholds applied to ${cam.camera_id}`);
  } catch (e) {
    setStatus(describe(e), true);
  }
}

// --- review gallery -----------------------------------------------------------

async function refreshGallery(): Promise<void> {
  try {
    const page = await api.listViolations({
      status: state.galleryStatus,
      page: state.galleryPage,
      page_size: 12,
    });
    state.gallery = page.items;
    state.galleryPages = Math.max(page.pages, 1);
    renderGallery();
  } catch (e) {
    setStatus(describe(e), true);
  }
}

function renderGallery(): void {
  el<HTMLSpanElement>('gallery-page').textContent = `page ${state.galleryPage} / ${state.galleryPages}`;
  const grid = el<HTMLDivElement>('gallery-grid');
  grid.innerHTML = '';
  for (const item of state.gallery) {
    const card = document.createElement('div');
    card.className = 'card';
    const img = document.createElement('img');
    const frameId = `${item.frame.camera_id}:${item.frame.pan_index}:${item.frame.sequence_no}`;
    img.src = api.frameImageUrl(frameId);
    img.alt = item.violation_id;
    card.appendChild(img);
    const meta = document.createElement('div');
    meta.className = 'meta';
    meta.textContent = `${item.violation_id} | run ${item.mean_longest_run.toFixed(1)} | ${item.frame.captured_at}`;
    card.appendChild(meta);
    const actions = document.createElement('div');
    actions.className = 'actions';
    if (item.status === 'pending') {
      actions.appendChild(reviewButton(item, 'confirm'));
      actions.appendChild(reviewButton(item, 'dismiss'));
    } else if (item.status === 'confirmed' && item.slip_no) {
      const slip = document.createElement('a');
      slip.href = api.slipUrl(item.violation_id);
      slip.target = '_blank';
      slip.textContent = `slip ${item.slip_no}`;
      actions.appendChild(slip);
    } else {
      actions.textContent = item.status;
    }
    card.appendChild(actions);
    grid.appendChild(card);
  }
}

function reviewButton(item: ViolationRecord, verdict: 'confirm' | 'dismiss'): HTMLButtonElement {
  const btn = document.createElement('button');
  btn.textContent = verdict;
  btn.onclick = async () => {
    btn.disabled = true; // dedupe double clicks locally; the server conflicts anyway
    const operator = el<HTMLInputElement>('operator-name').value.trim() || 'operator';
    const outcome = await submitReview(api, item.violation_id, verdict, operator);
    if (outcome.kind === 'error') {
      setStatus(outcome.message, true);
      btn.disabled = false;
      return;
    }
    state.gallery = mergeRecord(state.gallery, outcome.record);
    if (outcome.kind === 'conflict') {
      setStatus(`${item.violation_id} was already reviewed; showing server state`);
    } else if (outcome.record.slip_no) {
      setStatus(`${item.violation_id} confirmed, slip ${outcome.record.slip_no}`);
    } else {
      setStatus(`${item.violation_id} ${outcome.record.status}`);
    }
    renderGallery();
  };
  return btn;
}

// --- wiring -------------------------------------------------------------------

export function start(): void {
  for (const btn of document.querySelectorAll<HTMLButtonElement>('.tab-button')) {
    btn.onclick = () => showTab(btn.dataset['tab'] ?? 'calibrate');
  }
  el<HTMLSelectElement>('camera-select').onchange = (ev) =>
    selectCamera((ev.target as HTMLSelectElement).value);
  el<HTMLSelectElement>('pan-select').onchange = (ev) => {
    state.panIndex = Number((ev.target as HTMLSelectElement).value);
    state.clicks = [];
    state.draft = null;
    state.baseline = null;
    void redrawCalibration();
  };
  el<HTMLInputElement>('operator-token').onchange = (ev) => {
    api.setToken((ev.target as HTMLInputElement).value.trim());
  };
  el<HTMLCanvasElement>('calib-canvas').onclick = onCanvasClick;
  el<HTMLButtonElement>('apply-calibration').onclick = () => void applyCalibration();
  for (const id of ['d-th', 'l-th', 'pixel-th']) {
    el<HTMLInputElement>(id).onchange = () => void previewThresholds();
  }
  el<HTMLButtonElement>('apply-thresholds').onclick = () => void applyThresholds();
  el<HTMLSelectElement>('gallery-status').onchange = (ev) => {
    state.galleryStatus = (ev.target as HTMLSelectElement).value as ViolationStatus;
    state.galleryPage = 1;
    void refreshGallery();
  };
  el<HTMLButtonElement>('gallery-prev').onclick = () => {
    if (state.galleryPage > 1) {
      state.galleryPage--;
      void refreshGallery();
    }
  };
  el<HTMLButtonElement>('gallery-next').onclick = () => {
    if (state.galleryPage < state.galleryPages) {
      state.galleryPage++;
      void refreshGallery();
    }
  };
  loadCameras().catch((e) => setStatus(describe(e), true));
  showTab('calibrate');
}

if (typeof document !== 'undefined' && document.getElementById('status')) {
  start();
}
