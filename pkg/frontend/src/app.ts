/**
 * DOM wiring for the five panels: import/settings, explained variance,
 * Voronoi map + loadings, selection list, and cluster comparison. All
 * numbers come from the server; this layer only fetches, scales for
 * display, and routes events.
 */

import { ApiClient } from './api.js';
import { colorize } from './color.js';
import { lassoToIndices, makeTransform, rectToIndices } from './geometry.js';
import type { Point } from './geometry.js';
import { pollUntilReady } from './poll.js';
import {
  renderBarChartSvg,
  renderHistogramSvg,
  renderLegendSvg,
  renderVoronoiSvg,
  tallestBar,
} from './render.js';
import { canStartFit, initialState, reduce } from './state.js';
import type { Action, UiState } from './state.js';
import { colorModeLabel } from './types.js';
import type { ColorMode, PcaSummary, VoronoiData } from './types.js';

const MAP_SIZE = 640;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private api = new ApiClient('');
  private state: UiState = initialState();
  private pca: PcaSummary | null = null;
  private voro: VoronoiData | null = null;
  private colorValues: number[] = [];
  private sampleIds: string[] = [];
  private selectionMembers = new Map<string, number[]>();
  private lassoPath: Point[] = [];
  private tool: 'lasso' | 'rect' = 'lasso';
  private rectStart: Point | null = null;

  constructor() {
    this.bindImportPanel();
    this.bindMapPanel();
    this.bindComparisonPanel();
  }

  private dispatch(action: Action): void {
    this.state = reduce(this.state, action);
  }

  // ------------------------------------------------------------ import

  private bindImportPanel(): void {
    el<HTMLButtonElement>('fit-button').addEventListener('click', () => {
      void this.startFit();
    });
    el<HTMLButtonElement>('load-button').addEventListener('click', () => {
      void this.openExisting();
    });
  }

  private async openExisting(): Promise<void> {
    const sessionId = el<HTMLInputElement>('session-id').value.trim();
    const progress = el<HTMLSpanElement>('fit-progress');
    if (!sessionId) {
      progress.textContent = 'enter a session id to load';
      return;
    }
    try {
      const status = await this.api.status(sessionId);
      if (status.state !== 'ready') {
        progress.textContent = `session is ${status.state}`;
        return;
      }
      this.dispatch({ type: 'session-opened', sessionId });
      this.sampleIds = [];
      progress.textContent = `loaded session ${sessionId}`;
      await this.loadEverything();
    } catch (err) {
      progress.textContent = String(err);
    }
  }

  private async startFit(): Promise<void> {
    if (!canStartFit(this.state)) return;
    const fileInput = el<HTMLInputElement>('csv-file');
    const file = fileInput.files?.[0];
    const progress = el<HTMLSpanElement>('fit-progress');
    if (!file) {
      progress.textContent = 'choose a CSV file first';
      return;
    }
    try {
      const preprocessing = el<HTMLSelectElement>('preprocessing').value;
      const dataset = await this.api.uploadDataset(file, preprocessing);
      this.sampleIds = dataset.samples;

      const settings = {
        n_neighbors: Number(el<HTMLInputElement>('n-neighbors').value),
        min_dist: Number(el<HTMLInputElement>('min-dist').value),
        metric: el<HTMLSelectElement>('metric').value as 'euclidean' | 'manhattan' | 'cosine',
        n_epochs: Number(el<HTMLInputElement>('epochs').value),
        seed: Number(el<HTMLInputElement>('seed').value),
      };
      const maxPcs = Number(el<HTMLInputElement>('max-pcs').value);
      const { session_id } = await this.api.createSession(dataset.dataset_id, settings, maxPcs);
      this.dispatch({ type: 'fit-started', sessionId: session_id, totalEpochs: settings.n_epochs });

      await pollUntilReady(this.api, session_id, (status) => {
        this.dispatch({ type: 'fit-progress', status });
        const loss = status.loss === null ? '' : `, loss ${status.loss.toPrecision(5)}`;
        progress.textContent = `fitting: epoch ${status.epoch + 1}/${status.total_epochs}${loss}`;
      });
      this.dispatch({ type: 'fit-finished' });
      progress.textContent = 'ready';
      await this.loadEverything();
    } catch (err) {
      this.dispatch({ type: 'fit-failed' });
      progress.textContent = String(err);
    }
  }

  private async loadEverything(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    this.pca = await this.api.pca(sid);
    if (this.sampleIds.length === 0) {
      this.sampleIds = this.pca.samples;
    }
    this.dispatch({
      type: 'pca-loaded',
      selectedComponents: this.pca.selected_components,
      maxComponents: this.pca.n_components,
    });
    this.voro = await this.api.voronoi(sid);
    this.populateColorModeOptions();
    this.renderVariancePanel();
    await this.refreshMap();
    this.renderSelectionsPanel();
  }

  // ---------------------------------------------------------- variance

  private renderVariancePanel(): void {
    if (!this.pca) return;
    const host = el<HTMLDivElement>('variance-chart');
    host.innerHTML = renderBarChartSvg(
      this.pca.explained_variance_ratio,
      this.pca.explained_variance_ratio.map((_, i) => `PC${i + 1}`),
      { markerAfter: this.state.selectedComponents - 1, width: 420, height: 170 },
    );
    el<HTMLSpanElement>('selected-count').textContent =
      `${this.state.selectedComponents} of ${this.state.maxComponents} components`;

    const svg = host.querySelector('svg');
    const marker = host.querySelector('[data-role="marker"]');
    if (!svg || !marker || !this.pca) return;
    const slot = 420 / this.pca.explained_variance_ratio.length;

    let dragging = false;
    marker.addEventListener('mousedown', (e) => {
      dragging = true;
      e.preventDefault();
    });
    window.addEventListener('mousemove', (e) => {
      if (!dragging) return;
      const x = e.clientX - svg.getBoundingClientRect().left;
      const count = Math.max(1, Math.min(Math.round(x / slot), this.pca!.n_components));
      el<HTMLSpanElement>('selected-count').textContent =
        `${count} of ${this.state.maxComponents} components`;
    });
    window.addEventListener('mouseup', (e) => {
      if (!dragging) return;
      dragging = false;
      const x = e.clientX - svg.getBoundingClientRect().left;
      const count = Math.max(1, Math.min(Math.round(x / slot), this.pca!.n_components));
      void this.commitComponents(count);
    });
  }

  private async commitComponents(count: number): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid || count === this.state.selectedComponents) return;
    await this.api.setComponents(sid, count);
    this.dispatch({ type: 'components-committed', count });
    this.renderVariancePanel();
    this.populateColorModeOptions();
    await this.refreshMap(); // Q panels are stale after a component change
  }

  // --------------------------------------------------------------- map

  private bindMapPanel(): void {
    el<HTMLSelectElement>('color-mode').addEventListener('change', () => {
      void this.onColorModeChanged();
    });
    el<HTMLSelectElement>('tool').addEventListener('change', () => {
      this.tool = el<HTMLSelectElement>('tool').value as 'lasso' | 'rect';
    });
  }

  private populateColorModeOptions(): void {
    if (!this.pca) return;
    const select = el<HTMLSelectElement>('color-mode');
    const previous = select.value;
    const options: string[] = [];
    for (let k = 0; k < this.state.selectedComponents; k++) {
      options.push(`<option value="pc:${k}">PC ${k + 1} score</option>`);
    }
    options.push('<option value="q:total">Q residual (all PCs)</option>');
    for (let k = 0; k < this.state.selectedComponents; k++) {
      options.push(`<option value="q:${k}">Q residual, PC ${k + 1}</option>`);
    }
    for (const name of this.pca.variables) {
      options.push(`<option value="var:${name}">variable ${name}</option>`);
    }
    select.innerHTML = options.join('');
    select.value = [...select.options].some((o) => o.value === previous)
      ? previous
      : 'pc:0';
  }

  private parseColorMode(): ColorMode {
    const raw = el<HTMLSelectElement>('color-mode').value;
    const [kind, arg] = raw.split(':', 2);
    if (kind === 'pc') return { kind: 'pc_score', index: Number(arg) };
    if (kind === 'q') {
      return { kind: 'q_residual', index: arg === 'total' ? 'total' : Number(arg) };
    }
    return { kind: 'variable', index: arg };
  }

  private async onColorModeChanged(): Promise<void> {
    const mode = this.parseColorMode();
    this.dispatch({ type: 'color-mode-set', mode });
    if (mode.kind === 'pc_score') {
      this.dispatch({ type: 'active-component-set', index: mode.index });
    }
    await this.refreshMap();
  }

  private async refreshMap(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid || !this.voro || !this.pca) return;
    const mode = this.state.colorMode;
    const response = await this.api.color(sid, mode);
    this.colorValues = response.values;

    const { colors, min, max } = colorize(response.values);
    const highlight = new Map<number, string>();
    for (const entry of this.state.selections) {
      for (const idx of this.selectionMembers.get(entry.name) ?? []) {
        highlight.set(idx, entry.color);
      }
    }
    el<HTMLDivElement>('map-svg').innerHTML = renderVoronoiSvg(this.voro, colors, {
      size: MAP_SIZE,
      highlight,
      sampleIds: this.sampleIds,
      values: this.colorValues,
    });
    el<HTMLDivElement>('legend').innerHTML = renderLegendSvg(min, max);
    el<HTMLSpanElement>('legend-label').textContent = colorModeLabel(mode);
    this.bindLasso();
    this.renderLoadingsPanel();
  }

  private renderLoadingsPanel(): void {
    if (!this.pca) return;
    const k = this.state.activeComponent;
    const loadings = this.pca.loadings.map((row) => row[k]);
    el<HTMLDivElement>('loadings-chart').innerHTML = renderBarChartSvg(
      loadings,
      this.pca.variables,
      { width: 420, height: 170 },
    );
    el<HTMLSpanElement>('loadings-title').textContent = `loadings of PC ${k + 1}`;
  }

  private bindLasso(): void {
    const host = el<HTMLDivElement>('map-svg');
    const svg = host.querySelector('svg');
    if (!svg || !this.voro) return;
    const transform = makeTransform(this.voro.bbox, MAP_SIZE);

    const toWorld = (e: MouseEvent): Point => {
      const rect = svg.getBoundingClientRect();
      return transform.toWorld([e.clientX - rect.left, e.clientY - rect.top]);
    };

    svg.addEventListener('mousedown', (e) => {
      if (this.tool === 'lasso') {
        this.lassoPath = [toWorld(e)];
      } else {
        this.rectStart = toWorld(e);
      }
      e.preventDefault();
    });
    svg.addEventListener('mousemove', (e) => {
      if (this.tool === 'lasso' && this.lassoPath.length > 0) {
        this.lassoPath.push(toWorld(e));
      }
    });
    svg.addEventListener('mouseup', (e) => {
      const sites = this.voro!.sites as Point[];
      let indices: number[] = [];
      if (this.tool === 'lasso' && this.lassoPath.length >= 3) {
        indices = lassoToIndices(sites, this.lassoPath);
      } else if (this.tool === 'rect' && this.rectStart) {
        indices = rectToIndices(sites, this.rectStart, toWorld(e));
      }
      this.lassoPath = [];
      this.rectStart = null;
      if (indices.length > 0) void this.storeSelection(indices);
    });
  }

  private async storeSelection(indices: number[]): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    const nameInput = el<HTMLInputElement>('selection-name');
    const name = nameInput.value.trim() || `selection-${this.state.selections.length + 1}`;
    const { size } = await this.api.addSelection(sid, name, indices);
    this.selectionMembers.set(name, indices);
    this.dispatch({ type: 'selection-added', name, size });
    nameInput.value = '';
    this.renderSelectionsPanel();
    await this.refreshMap();
  }

  // -------------------------------------------------------- selections

  private renderSelectionsPanel(): void {
    const host = el<HTMLDivElement>('selection-list');
    if (this.state.selections.length === 0) {
      host.innerHTML = '<p class="hint">lasso or rectangle-drag on the map to select samples</p>';
      return;
    }
    const rows = this.state.selections.map((s) => {
      const checkedA = this.state.pendingPair.a === s.name ? 'checked' : '';
      const checkedB = this.state.pendingPair.b === s.name ? 'checked' : '';
      return (
        `<tr><td><span class="chip" style="background:${s.color}"></span>${s.name}</td>` +
        `<td>${s.size}</td>` +
        `<td><input type="radio" name="pair-a" data-a="${s.name}" ${checkedA}></td>` +
        `<td><input type="radio" name="pair-b" data-b="${s.name}" ${checkedB}></td></tr>`
      );
    });
    host.innerHTML =
      '<table><thead><tr><th>selection</th><th>size</th><th>A</th><th>B</th></tr></thead>' +
      `<tbody>${rows.join('')}</tbody></table>`;
    host.querySelectorAll('input[data-a]').forEach((node) => {
      node.addEventListener('change', () => {
        this.dispatch({
          type: 'pair-slot-picked',
          slot: 'a',
          name: (node as HTMLInputElement).dataset.a!,
        });
      });
    });
    host.querySelectorAll('input[data-b]').forEach((node) => {
      node.addEventListener('change', () => {
        this.dispatch({
          type: 'pair-slot-picked',
          slot: 'b',
          name: (node as HTMLInputElement).dataset.b!,
        });
      });
    });
  }

  // -------------------------------------------------------- comparison

  private bindComparisonPanel(): void {
    el<HTMLButtonElement>('compare-button').addEventListener('click', () => {
      void this.runComparison();
    });
  }

  private async runComparison(): Promise<void> {
    const sid = this.state.sessionId;
    const { a, b } = this.state.pendingPair;
    const note = el<HTMLSpanElement>('compare-note');
    if (!sid || !a || !b) {
      note.textContent = 'pick selections A and B first';
      return;
    }
    const report = await this.api.compare(sid, a, b);
    const ranked = report.ranking.map((i) => report.values[i]);
    const labels = report.ranking.map((i) => report.variables[i]);
    el<HTMLDivElement>('compare-chart').innerHTML = renderBarChartSvg(ranked, labels, {
      width: 420,
      height: 190,
    });
    const top = report.variables[tallestBar(report.values)];
    note.textContent = `comparing ${a} vs ${b}: top variable ${top}`;

    const colors: Record<string, string> = {};
    for (const entry of this.state.selections) colors[entry.name] = entry.color;
    const hist = await this.api.histogram(sid, top, [a, b]);
    el<HTMLDivElement>('histogram-chart').innerHTML = renderHistogramSvg(
      hist.edges,
      hist.counts,
      colors,
    );
    el<HTMLSpanElement>('histogram-title').textContent = `histogram of ${top}`;
  }
}

window.addEventListener('DOMContentLoaded', () => {
  new App();
});
