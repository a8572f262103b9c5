/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_workbench_free: (a: number, b: number) => void;
export const rasterize_polygon: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const workbench_clear: (a: number) => void;
export const workbench_dims: (a: number) => [number, number];
export const workbench_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const workbench_paint: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const workbench_plane_shape: (a: number, b: number, c: number) => [number, number, number, number];
export const workbench_seed_count: (a: number) => number;
export const workbench_segment: (a: number) => [number, number, number, number];
export const workbench_slice_rgba: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
