/* tslint:disable */
/* eslint-disable */

export function pg_curve(b: number, c: number, xmax: number, points: number): Float64Array;

export function pg_histogram(b: number, c: number, draws: number, bins: number, xmax: number, seed: bigint): Float64Array;

export function plan(rows: number, trials: number, precision: number, a: number, b: number, tau0: number, curve: bigint): Float64Array;

export function tiny_trace(iterations: number, seed: bigint, tau0: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly pg_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly pg_histogram: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly plan: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
    readonly tiny_trace: (a: number, b: bigint, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
