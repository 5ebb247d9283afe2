# Copyright (c) 2026, the dpsd authors
import sys
import json
import math
import time
import timeit
import logging
import typing
import itertools
import numpy as np
import pandas as pd
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError
from dpsd.bitstring.corpus import read_corpus, write_corpus
from dpsd.sketch.hamming_sketch import KExceedsNError
from dpsd.oracle.exact import exact_hamming, exact_edit
from dpsd.oracle.planting import apply_random_edits
from dpsd.edit.too_far import TOO_FAR, distance_to_json, distance_from_string
from dpsd.edit.landau_vishkin import edit_query_state
from dpsd.database.sketch_store import SketchMode, build, query_all
from dpsd.database.store_format import write_store, read_store, serialized_size
from dpsd.database.sensitivity_audit import audit_hamming, audit_tree
from dpsd.util.seeding import new_master_seed, derive_rng, derive_seed
from dpsd.cli.run_config import RunConfig, ConfigError, OutputFormat

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_AUDIT_VIOLATION = 3

# Derivation tags for the command-level streams, distinct from the store's own tags
GEN_TAG = 10
AUDIT_TAG = 11
BENCH_TAG = 12

BENCH_REPEATS = 5
BENCH_COLUMNS = ['mode', 'n', 'm', 'k', 'copies', 'build_seconds', 'query_seconds', 'lcp_queries', 'store_bytes']


def query_path_for(output) -> str:
    return f"{output}.query"


def truth_path_for(output) -> str:
    return f"{output}.truth"


def _write_records(records: typing.List[dict], output_format: OutputFormat, out: typing.TextIO,
                   columns: typing.Optional[typing.List[str]] = None) -> None:
    if output_format is OutputFormat.TSV:
        frame = pd.DataFrame.from_records(records, columns=columns)
        frame.to_csv(out, sep='\t', index=False)
    else:
        for record in records:
            out.write(json.dumps(record) + '\n')


def cmd_gen(config: RunConfig, out: typing.TextIO = sys.stdout) -> int:
    """
    Generate a random corpus of m strings of length n.
    With a planted distance, also write a query string at exactly that Hamming distance from every string,
    or within that many edits in edit mode, and a truth sidecar of the exact distances.
    :param config:
    :param out: Where to report what was written
    :return: The exit code
    """
    master_seed = config.seed if config.seed is not None else new_master_seed()
    rng = derive_rng(master_seed, GEN_TAG)
    if config.planted_distance is None:
        strings = [PackedBitString.from_bits(rng.integers(0, 2, size=config.n, dtype=np.uint8))
                   for _ in range(config.m)]
        write_corpus(config.output, strings)
        out.write(json.dumps({'corpus': str(config.output), 'm': config.m, 'n': config.n}) + '\n')
        return EXIT_OK

    distance = config.planted_distance
    query_bits = rng.integers(0, 2, size=config.n, dtype=np.uint8)
    query = PackedBitString.from_bits(query_bits)
    strings = []
    truth = []
    for index in range(config.m):
        if config.mode is SketchMode.HAMMING:
            bits = query_bits.copy()
            bits[rng.choice(config.n, size=distance, replace=False)] ^= 1
            a = PackedBitString.from_bits(bits)
            exact = exact_hamming(a, query)
        else:
            a = PackedBitString.from_bits(apply_random_edits(query_bits, distance, rng))
            exact = exact_edit(a, query, k=max(distance, 1))
        strings.append(a)
        truth.append({'index': index, 'distance': distance_to_json(exact)})
    write_corpus(config.output, strings)
    write_corpus(query_path_for(config.output), [query])
    with open(truth_path_for(config.output), 'w') as truth_file:
        for record in truth:
            truth_file.write(json.dumps(record) + '\n')
    out.write(json.dumps({'corpus': str(config.output), 'query': query_path_for(config.output),
                          'truth': truth_path_for(config.output), 'm': config.m, 'n': config.n,
                          'planted_distance': distance}) + '\n')
    return EXIT_OK


def cmd_build(config: RunConfig, out: typing.TextIO = sys.stdout) -> int:
    """
    Build a store from a corpus file, reporting the privacy cost and the time spent in each phase
    """
    start = time.perf_counter()
    strings = read_corpus(config.input)
    if len(strings) > 0 and config.k > strings[0].length:
        raise KExceedsNError(config.k, strings[0].length)
    read_time = time.perf_counter()
    store = build(strings, k=config.k, eps_per_copy=config.eps, beta=config.beta, mode=config.mode,
                  master_seed=config.seed, copies=config.copies, threads=config.threads,
                  n=config.n if len(strings) <= 0 else None)
    build_time = time.perf_counter()
    num_bytes = write_store(config.output, store)
    write_time = time.perf_counter()
    out.write(json.dumps({
        'store': str(config.output),
        'mode': store.mode.name.lower(),
        'm': store.m,
        'n': store.n,
        'k': store.k,
        'copies': store.copies,
        'eps_per_copy': store.eps_per_copy if math.isfinite(store.eps_per_copy) else 'inf',
        'total_eps': store.total_eps if math.isfinite(store.total_eps) else 'inf',
        'bytes': num_bytes,
        'read_seconds': read_time - start,
        'build_seconds': build_time - read_time,
        'write_seconds': write_time - build_time
    }) + '\n')
    return EXIT_OK


def read_truth(path) -> typing.Dict[typing.Tuple[int, int], typing.Any]:
    """
    Read a truth sidecar, JSON lines of {index, distance}, with an optional query number defaulting to 0
    :return: A map from (query, index) to the exact distance
    """
    truth = {}
    with open(path, 'r') as truth_file:
        for line_number, line in enumerate(truth_file):
            line = line.strip()
            if len(line) <= 0:
                continue
            try:
                record = json.loads(line)
                truth[(int(record.get('query', 0)), int(record['index']))] = \
                    distance_from_string(record['distance'])
            except (ValueError, KeyError, TypeError) as err:
                raise ConfigError(f"Bad truth record on line {line_number + 1}: {err}") from err
    return truth


def cmd_query(config: RunConfig, out: typing.TextIO = sys.stdout) -> int:
    """
    Estimate the distance from each query string to every stored string.
    One record per (query, string). With a truth sidecar, records also carry the exact distance and the error.
    """
    store = read_store(config.input)
    if 'mode' in config.given and config.mode is not store.mode:
        raise ConfigError(f"--mode {config.mode.name.lower()} does not match the store's mode "
                          f"{store.mode.name.lower()}")
    queries = read_corpus(config.query)
    truth = read_truth(config.truth) if config.truth is not None else None
    records = []
    for query_idx, query in enumerate(queries):
        if query.length != store.n:
            raise LengthMismatchError(query.length, store.n)
        start = time.perf_counter()
        estimates = query_all(store, query, backend=config.backend)
        logging.getLogger(__name__).info(
            f"Query {query_idx} against {store.m} strings took {time.perf_counter() - start:.3f}s")
        for index, estimate in enumerate(estimates):
            record = {'query': query_idx, 'index': index, 'estimate': distance_to_json(estimate)}
            if truth is not None and (query_idx, index) in truth:
                exact = truth[(query_idx, index)]
                record['exact'] = distance_to_json(exact)
                if estimate is not TOO_FAR and exact is not TOO_FAR:
                    record['abs_error'] = abs(estimate - exact)
            records.append(record)
    columns = ['query', 'index', 'estimate']
    if truth is not None:
        columns += ['exact', 'abs_error']
    if config.output is not None:
        with open(config.output, 'w') as output_file:
            _write_records(records, config.format, output_file, columns=columns)
    else:
        _write_records(records, config.format, out, columns=columns)
    return EXIT_OK


def cmd_audit(config: RunConfig, out: typing.TextIO = sys.stdout, encoder=None) -> int:
    """
    Check empirically that neighbouring strings change at most the bounded number of sketch cells.
    Parameters come from --input when a store is given, otherwise from the flags.
    :param config:
    :param out:
    :param encoder: Replace the encoder under audit
    :return: EXIT_AUDIT_VIOLATION if any pair exceeds the bound
    """
    mode, n, k, eps, seed = config.mode, config.n, config.k, config.eps, None
    if config.input is not None:
        store = read_store(config.input)
        mode, n, k, eps, seed = store.mode, store.n, store.k, store.eps_per_copy, store.seeds[0]
    master_seed = config.seed if config.seed is not None else new_master_seed()
    rng = derive_rng(master_seed, AUDIT_TAG)
    if seed is None:
        seed = derive_seed(master_seed, AUDIT_TAG)
    audit = audit_hamming if mode is SketchMode.HAMMING else audit_tree
    kwargs = {} if encoder is None else {'encoder': encoder}
    report = audit(n=n, k=k, eps=eps, trials=config.trials, rng=rng, seed=seed, **kwargs)
    out.write(json.dumps(report.as_dict()) + '\n')
    if not report.passed:
        logging.getLogger(__name__).error(
            f"Audit failed: {report.violations} of {report.trials} neighbour pairs exceeded {report.cell_bound} cells")
        return EXIT_AUDIT_VIOLATION
    return EXIT_OK


def bench_grid(config: RunConfig) -> typing.List[typing.Tuple[int, int, int]]:
    """
    Every combination of the configured n, m, k and their doubles, skipping k > n
    """
    return [
        (n, m, k)
        for n, m, k in itertools.product((config.n, 2 * config.n), (config.m, 2 * config.m),
                                         (config.k, 2 * config.k))
        if k <= n
    ]


def bench_point(mode: SketchMode, n: int, m: int, k: int, config: RunConfig, master_seed: int) -> dict:
    """
    Time building and querying one store, as the median of repeated runs
    """
    rng = derive_rng(master_seed, BENCH_TAG, n, m, k)
    strings = [PackedBitString.from_bits(rng.integers(0, 2, size=n, dtype=np.uint8)) for _ in range(m)]
    query = PackedBitString.from_bits(rng.integers(0, 2, size=n, dtype=np.uint8))
    copies = config.copies if config.copies is not None else 1
    stores = []

    def run_build():
        stores.append(build(strings, k=k, eps_per_copy=config.eps, beta=config.beta, mode=mode,
                            master_seed=master_seed, copies=copies, threads=config.threads, n=n))

    build_times = timeit.repeat(run_build, number=1, repeat=BENCH_REPEATS)
    store = stores[-1]
    query_times = timeit.repeat(lambda: query_all(store, query, backend=config.backend),
                                number=1, repeat=BENCH_REPEATS)
    lcp_queries = 0
    if mode is SketchMode.EDIT:
        lcp_queries = sum(edit_query_state(copies_of[0], query, backend=config.backend).lcp_queries
                          for copies_of in store.structures)
    return {
        'mode': mode.name.lower(),
        'n': n,
        'm': m,
        'k': k,
        'copies': copies,
        'build_seconds': float(np.median(build_times)),
        'query_seconds': float(np.median(query_times)),
        'lcp_queries': lcp_queries,
        'store_bytes': serialized_size(store)
    }


def cmd_bench(config: RunConfig, out: typing.TextIO = sys.stdout) -> int:
    """
    Time build and query over a doubling grid of (n, m, k), writing a TSV table
    """
    master_seed = config.seed if config.seed is not None else new_master_seed()
    records = []
    for n, m, k in bench_grid(config):
        record = bench_point(config.mode, n, m, k, config, master_seed)
        logging.getLogger(__name__).info(f"Bench point {record}")
        records.append(record)
    frame = pd.DataFrame.from_records(records, columns=BENCH_COLUMNS)
    if config.output is not None:
        frame.to_csv(config.output, sep='\t', index=False)
    else:
        frame.to_csv(out, sep='\t', index=False)
    return EXIT_OK
