/* tslint:disable */
/* eslint-disable */

/**
 * Simultaneous shift bounds against the control.
 */
export function confidence_bounds(text: string, gamma: number, direction: string, rounding_eps: number): string;

/**
 * Steel test with asymptotic, exact (when small) and simulated p-values.
 */
export function steel_test(text: string, alternative: string, nsim: number, seed: number): string;

/**
 * Simulated and asymptotic tail probabilities over a threshold grid.
 */
export function tail_curve(text: string, alternative: string, nsim: number, seed: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly confidence_bounds: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly steel_test: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly tail_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
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
