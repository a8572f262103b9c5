/* tslint:disable */
/* eslint-disable */

export class Workbench {
    free(): void;
    [Symbol.dispose](): void;
    clear(): void;
    dims(): Uint32Array;
    /**
     * `kind` is `"horseshoe"` or `"sphere"`.
     */
    constructor(kind: string, size: number, noise_sigma: number, seed: number);
    paint(plane_name: string, index: number, u: number, v: number, radius: number, foreground: boolean): number;
    /**
     * `[width, height, extent]` of a plane.
     */
    plane_shape(plane_name: string): Uint32Array;
    seed_count(): number;
    /**
     * JSON: `{iterations, converged, voxels, dice, hausdorff}`.
     */
    segment(): string;
    slice_rgba(plane_name: string, index: number, window: number, level: number): Uint8Array;
}

export function rasterize_polygon(coords: Float64Array, width: number, height: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_workbench_free: (a: number, b: number) => void;
    readonly rasterize_polygon: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly workbench_clear: (a: number) => void;
    readonly workbench_dims: (a: number) => [number, number];
    readonly workbench_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly workbench_paint: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly workbench_plane_shape: (a: number, b: number, c: number) => [number, number, number, number];
    readonly workbench_seed_count: (a: number) => number;
    readonly workbench_segment: (a: number) => [number, number, number, number];
    readonly workbench_slice_rgba: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
