/* tslint:disable */
/* eslint-disable */

/**
 * `{importances, selected, informative, recovered}`
 */
export function feature_ranking(rows: number, dims: number, informative: number, noise: number, seed: number, k: number): string;

/**
 * `{points: [[pc1, pc2, label]], explained_ratio: [r1, r2]}`
 */
export function pca_scatter(rows: number, dims: number, informative: number, noise: number, seed: number): string;

/**
 * `{grid: [{w1, accuracy}], w1, test: {n, accuracy, f1, auc}, roc: [[fpr, tpr]]}`
 */
export function vote_search(rows: number, dims: number, informative: number, noise: number, seed: number, method: string, k: number, kind: string, n_trees: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly feature_ranking: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly pca_scatter: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly vote_search: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
