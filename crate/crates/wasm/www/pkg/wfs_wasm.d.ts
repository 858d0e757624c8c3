/* tslint:disable */
/* eslint-disable */

export function builtin_source(name: string): string | undefined;

/**
 * Parses `.wfs` text and checks it. Always returns JSON: either
 * `{"ok": false, "diagnostic": {...}}` or `{"ok": true, "contradictions": n, "report": "..."}`.
 */
export function check_source(text: string, policy_name: string): string;

/**
 * Best Hardy witness for `cos θ|uu> + sin θ|dd>`, as a JSON report.
 */
export function hardy_at(theta_deg: number, grid_deg: number): string;

/**
 * `[[theta, p], ...]` for theta in `[0, 90]`.
 */
export function hardy_sweep(step_deg: number, grid_deg: number): string;

/**
 * Text report of a built-in scenario run.
 */
export function run_builtin(name: string, policy_name: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly builtin_source: (a: number, b: number) => [number, number];
    readonly check_source: (a: number, b: number, c: number, d: number) => [number, number];
    readonly hardy_at: (a: number, b: number) => [number, number, number, number];
    readonly hardy_sweep: (a: number, b: number) => [number, number, number, number];
    readonly run_builtin: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
