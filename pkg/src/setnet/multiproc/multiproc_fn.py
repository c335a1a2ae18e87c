"""
Run a function in multiple processes with a progress bar and error handling.

Grid experiments use this to train their members side by side. Members run for minutes
to hours each, so progress is counted when a result arrives, not when a task is queued.
"""

from __future__ import annotations

from multiprocessing import Process, Queue
from timeit import default_timer
from typing import Any, Callable, Optional

from attrs import define, field
from loguru import logger

from setnet.dtime import format_seconds_adaptive
from setnet.errors import format_exception
from setnet.tqdmext import tqdm_max_ncols


@define
class FnMultiProcessor:
    """
    Multiprocessor with N workers whose results are appended to an unbounded output queue.

    Usage:
        1. create instance
        2. loop put(arg1, arg2, ...) over the tasks
        3. run()
        4. loop get() once per task, results arrive in completion order
        5. close()

    Args:
        workers: number of worker processes (0 = all tasks run in the foreground on run())
        target_fn: module-level function, called as target_fn(*args) in the worker
        ignore_errors: log errors in the worker and output None instead of raising
        verbose: show progress bar
        total: total number of tasks for the progress bar or None if unknown
        desc: description for the progress bar
    """

    workers: int
    target_fn: Callable
    ignore_errors: bool = False
    verbose: bool = True
    total: Optional[int] = None
    desc: str = "Multiprocessing"

    worker_list: list[Process] = field(factory=list, init=False)
    q_in: Queue = field(init=False)
    q_out: Queue = field(init=False)
    pbar: Optional[tqdm_max_ncols] = field(default=None, init=False)
    start_time: float = field(init=False)
    n_put: int = field(default=0, init=False)
    n_done: int = field(default=0, init=False)

    def __attrs_post_init__(self):
        if self.workers < 0:
            raise ValueError(f"workers must be >= 0 but is {self.workers}")
        # bounded input in the background keeps memory flat for long task lists
        self.q_in = Queue(maxsize=self.workers * 2)
        self.q_out = Queue(maxsize=0)
        for _ in range(self.workers):
            w = Process(
                target=multi_fn_with_output,
                args=(self.target_fn, self.q_in, self.q_out, self.ignore_errors),
            )
            w.start()
            self.worker_list.append(w)
        self.start_time = default_timer()

    def put(self, *args: Any) -> None:
        self.q_in.put(args)
        self.n_put += 1

    def run(self) -> None:
        """Start consuming. With workers=0 this runs every task before returning."""
        if self.workers == 0:
            self.q_in.put(None)
            multi_fn_with_output(
                self.target_fn,
                self.q_in,
                self.q_out,
                self.ignore_errors,
                total=self.n_put,
                desc=self.desc,
                verbose=self.verbose,
            )
            return
        # one poison pill per worker
        for _ in range(self.workers):
            self.q_in.put(None)
        self.pbar = tqdm_max_ncols(
            total=self.total or self.n_put, desc=self.desc, disable=not self.verbose
        )

    def get(self) -> Any:
        out = self.q_out.get()
        self.n_done += 1
        if self.pbar is not None:
            sec_per_task = (default_timer() - self.start_time) / self.n_done
            left = sec_per_task * (self.n_put - self.n_done)
            self.pbar.set_description(
                f"{self.desc} {format_seconds_adaptive(left, '{:5.2f}{}')} left", refresh=False
            )
            self.pbar.update(1)
        return out

    def close(self) -> None:
        # the output queue has to be drained before joining, otherwise this hangs
        logger.debug(f"Joining {len(self.worker_list)} workers after {self.n_done} results")
        for w in self.worker_list:
            w.join()
            w.terminate()
        if self.pbar is not None:
            self.pbar.close()
        self.q_in.close()
        self.q_out.close()


def multi_fn_with_output(
    fn: Callable,
    in_q: Queue,
    out_q: Queue,
    ignore_errors: bool,
    total: Optional[int] = None,
    desc: str = "Processing",
    verbose: bool = False,
) -> None:
    """Worker loop: call fn on each queued args tuple until the None pill arrives."""
    pbar = tqdm_max_ncols(total=total, disable=not verbose, desc=desc)
    while True:
        args = in_q.get()
        if args is None:
            break
        try:
            out = fn(*args)
        except Exception as e:
            logger.error(f"{fn.__name__} failed:\n{format_exception(e, with_traceback=True)}")
            if not ignore_errors:
                pbar.close()
                raise
            out = None
        out_q.put(out)
        pbar.update(1)
    pbar.close()
