/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const coupled_quantiles: (a: number, b: number, c: number) => [number, number, number, number];
export const harmonic_tree: (a: number, b: number, c: bigint) => [number, number, number, number];
export const solve: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
export const theta_pmf: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
