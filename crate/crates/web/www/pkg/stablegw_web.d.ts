/* tslint:disable */
/* eslint-disable */

/**
 * Coupled offspring counts: the θ quantile at `u_i = (i + 1/2)/n` for
 * each α in `alphas`, one row per `u_i`, row-major. Counts saturate at
 * `u32::MAX`.
 */
export function coupled_quantiles(alphas: Float64Array, n: number): Uint32Array;

/**
 * A ρ_α tree conditioned to reach level `n`, reduced to its vertices with
 * descendants at level `n`. JSON with the parent, generation and harmonic
 * mass of every vertex, plus the conductance and the number of attempts.
 */
export function harmonic_tree(alpha: number, n: number, seed: bigint): string;

/**
 * Solve for the conductance law and summarise it: iteration count, stop
 * rule, moments, the shape fit on [1, 2], the β point estimate and the
 * tail `P(C ≥ t)` on `points` log-spaced values of t in [1, t_max].
 */
export function solve(alpha: number, pool_size: number, seed: bigint, points: number, t_max: number): string;

/**
 * θ_α probabilities for k = 0..=k_max.
 */
export function theta_pmf(alpha: number, k_max: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly coupled_quantiles: (a: number, b: number, c: number) => [number, number, number, number];
    readonly harmonic_tree: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly solve: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly theta_pmf: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
