/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demosession_free: (a: number, b: number) => void;
export const candidate_count: (a: number, b: number) => number;
export const demosession_holdout_count: (a: number) => number;
export const demosession_holdout_record: (a: number, b: number) => [number, number];
export const demosession_localize: (a: number, b: number, c: number) => [number, number];
export const demosession_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demosession_repair_holdout: (a: number, b: number) => [number, number];
export const demosession_train_count: (a: number) => number;
export const demosession_train_epoch: (a: number) => [number, number, number, number];
export const mutate_method: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const mutation_kinds: () => [number, number];
export const parse_method: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
