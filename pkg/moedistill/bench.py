"""Inference cost: effective parameters, analytic FLOPs and throughput."""

import logging
import time

import numpy as np
from oslo_config import cfg
import threadpoolctl

from moedistill.autograd import tensor
from moedistill.data import vocab as vocab_
from moedistill.model import counting

logger = logging.getLogger(__name__)

bench_opts = [
    cfg.IntOpt('repeats',
               default=5,
               min=1,
               help='Timed passes over the benchmark inputs; the median '
                    'is reported.'),
    cfg.IntOpt('warmup',
               default=2,
               min=0,
               help='Untimed passes before timing.'),
    cfg.IntOpt('examples',
               default=32,
               min=1,
               help='Number of evaluation examples timed per pass.'),
    cfg.IntOpt('threads',
               default=1,
               min=1,
               help='BLAS threads allowed while timing.'),
]

CONF = cfg.CONF
CONF.register_opts(bench_opts, group="bench")


def fixed_length_inputs(data, seq_len, examples):
    """Token ids and masks of the first `examples`, padded to `seq_len`."""
    chosen = [data[i] for i in range(min(examples, len(data)))]
    ids = np.full((len(chosen), seq_len), vocab_.PAD_ID, dtype=np.int64)
    mask = np.zeros((len(chosen), seq_len))
    for row, example in enumerate(chosen):
        tokens = example.token_ids[example.mask > 0][:seq_len]
        ids[row, :tokens.size] = tokens
        mask[row, :tokens.size] = 1.0
    return ids, mask


def _timed_pass(model, ids, mask):
    start = time.perf_counter()
    with tensor.no_grad():
        for row in range(ids.shape[0]):
            model(ids[row:row + 1], mask[row:row + 1])
    return time.perf_counter() - start


def bench_inference(model, data, repeats=None, warmup=None, seq_len=None,
                    examples=None, threads=None):
    """Benchmark report of `model` on `data` (batch size 1, fixed length).

    BLAS runs on at most `threads` threads while timing.  The analytic
    quantities do not depend on `repeats`.
    """
    repeats = CONF.bench.repeats if repeats is None else repeats
    warmup = CONF.bench.warmup if warmup is None else warmup
    examples = CONF.bench.examples if examples is None else examples
    threads = CONF.bench.threads if threads is None else threads
    seq_len = model.config.max_seq_len if seq_len is None else seq_len

    ids, mask = fixed_length_inputs(data, seq_len, examples)
    with threadpoolctl.threadpool_limits(limits=threads, user_api="blas"):
        for _ in range(warmup):
            _timed_pass(model, ids, mask)
        timings = [_timed_pass(model, ids, mask) for _ in range(repeats)]
    median = float(np.median(timings))

    flops = counting.flops_breakdown(model, seq_len)
    report = {
        "examples": int(ids.shape[0]),
        "seq_len": seq_len,
        "repeats": repeats,
        "threads": threads,
        "examples_per_second": ids.shape[0] / median if median else None,
        "flops_per_token": flops["total"],
        "ffn_flops_per_token": flops["ffn"],
        "routing_flops": flops["routing"],
        "effective_params": counting.count_effective_params(model),
        "params": counting.count_params(model),
    }
    logger.info("Benchmark: %.1f examples/s, %d FLOPs/token, %d effective "
                "params", report["examples_per_second"] or 0.0,
                report["flops_per_token"], report["effective_params"])
    return report


def compare(dense, student, data, **kwargs):
    """Reports of a dense model and its MoE student on identical inputs."""
    reports = {"dense": bench_inference(dense, data, **kwargs),
               "moe": bench_inference(student, data, **kwargs)}
    dense_speed = reports["dense"]["examples_per_second"]
    moe_speed = reports["moe"]["examples_per_second"]
    reports["speedup"] = moe_speed / dense_speed if dense_speed else None
    reports["ffn_flops_ratio"] = (
        reports["moe"]["ffn_flops_per_token"] /
        float(reports["dense"]["ffn_flops_per_token"]))
    return reports
