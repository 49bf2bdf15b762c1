/* tslint:disable */
/* eslint-disable */

/**
 * A live training session over a generated corpus, with a held-out slice
 * for honest localization demos.
 */
export class DemoSession {
    free(): void;
    [Symbol.dispose](): void;
    holdout_count(): number;
    /**
     * One held-out record, for the localization panel.
     */
    holdout_record(index: number): string;
    /**
     * Rank every operation path of a method with the current parameters.
     */
    localize(src: string): string;
    /**
     * Generate `n_mutants` bugs over `n_seeds` synthetic methods and set
     * up a trainer at the given width; one tenth is held out.
     */
    constructor(seed: number, n_seeds: number, n_mutants: number, dims: number, lr: number);
    /**
     * Localize a held-out mutant with the model, then run the heuristic
     * repair schedule against the oracle validator.
     */
    repair_holdout(index: number): string;
    train_count(): number;
    /**
     * Run one epoch and report its loss and train recall.
     */
    train_epoch(): string;
}

/**
 * Candidate operation-path count of a method (3 per leaf).
 */
export function candidate_count(src: string): number;

/**
 * Inject one seeded bug of the given kind ("Any" picks one) and report the
 * pair with its oracle.
 */
export function mutate_method(src: string, kind: string, seed: number): string;

/**
 * Names of the available mutation kinds.
 */
export function mutation_kinds(): string;

/**
 * Parse a method and describe its leaves and root-to-leaf paths.
 */
export function parse_method(src: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demosession_free: (a: number, b: number) => void;
    readonly candidate_count: (a: number, b: number) => number;
    readonly demosession_holdout_count: (a: number) => number;
    readonly demosession_holdout_record: (a: number, b: number) => [number, number];
    readonly demosession_localize: (a: number, b: number, c: number) => [number, number];
    readonly demosession_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demosession_repair_holdout: (a: number, b: number) => [number, number];
    readonly demosession_train_count: (a: number) => number;
    readonly demosession_train_epoch: (a: number) => [number, number, number, number];
    readonly mutate_method: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly mutation_kinds: () => [number, number];
    readonly parse_method: (a: number, b: number) => [number, number];
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
