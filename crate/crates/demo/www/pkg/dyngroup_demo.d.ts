/* tslint:disable */
/* eslint-disable */

export function hypervolume(points_json: string): number;

/**
 * Climate and economic index of a (warming, output) outcome.
 */
export function indices(temp_rise: number, output: number): Float64Array;

/**
 * Runs one episode; returns JSON with per-step aggregates and final metrics.
 */
export function runScenario(scenario: string, seed: number, horizon: number): string;

/**
 * Splits a group's average mitigation level among three members.
 */
export function shareSplit(p0: number, p1: number, p2: number, commitment: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly hypervolume: (a: number, b: number) => [number, number, number];
    readonly indices: (a: number, b: number) => [number, number];
    readonly runScenario: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly shareSplit: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
