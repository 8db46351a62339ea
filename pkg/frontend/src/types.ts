/** Wire types mirrored from the server API. */

export interface DatasetInfo {
  dataset_id: string;
  samples: string[];
  variables: string[];
  shape: [number, number];
  preprocessing: string;
  zero_variance: number[];
}

export interface SessionStatus {
  state: 'fitting' | 'ready' | 'failed';
  epoch: number;
  total_epochs: number;
  loss: number | null;
  error?: { code: string; message: string };
}

export interface PcaSummary {
  explained_variance_ratio: number[];
  eigenvalues: number[];
  selected_components: number;
  n_components: number;
  loadings: number[][];
  variables: string[];
  samples: string[];
}

export interface ComponentsSummary {
  selected_components: number;
  q_total_max: number;
  t2_max: number;
  excluded_components: number[];
}

export interface VoronoiData {
  sites: [number, number][];
  cells: [number, number][][];
  bbox: [number, number, number, number];
}

export interface ColorResponse {
  mode: string;
  index: string | null;
  values: number[];
}

export interface CompareResponse {
  values: number[];
  ranking: number[];
  ranked_variables?: string[];
  selection_a: string;
  selection_b: string;
  variables: string[];
}

export interface HistogramResponse {
  variable: string;
  edges: number[];
  counts: Record<string, number[]>;
}

export interface UmapSettings {
  n_neighbors: number;
  min_dist: number;
  metric: 'euclidean' | 'manhattan' | 'cosine';
  n_epochs: number;
  seed: number;
}

/** Coloring choice for the map panel. */
export type ColorMode =
  | { kind: 'pc_score'; index: number }
  | { kind: 'q_residual'; index: number | 'total' }
  | { kind: 'variable'; index: string };

export function colorModeLabel(mode: ColorMode): string {
  switch (mode.kind) {
    case 'pc_score':
      return `PC ${mode.index + 1} score`;
    case 'q_residual':
      return mode.index === 'total'
        ? 'Q residual (all PCs)'
        : `Q residual, PC ${(mode.index as number) + 1}`;
    case 'variable':
      return `variable ${mode.index}`;
  }
}
