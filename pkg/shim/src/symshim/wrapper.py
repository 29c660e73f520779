"""Wrap a model component, record its I/O, and optionally replace its
forward computation with a fitted expression bank.

The wrapped target is either a torch ``nn.Module`` or any callable mapping
rank-2 real batches to rank-2 real batches. Recording stores rows as
float64 on the host regardless of the model's precision or device.
Expression banks are evaluated batched in float64 and treated as constant
functions: no gradients flow through a symbolic forward.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .compile import BankParseError, Compiled, compile_expression
from .io import write_table


class WrappedBlock(torch.nn.Module):
    """A recording/replacement wrapper around one model component."""

    def __init__(self, component, block_name: str = "block"):
        super().__init__()
        if isinstance(component, torch.nn.Module):
            self.block = component
            self._callable = None
        elif callable(component):
            self.block = None
            self._callable = component
        else:
            raise TypeError("component must be an nn.Module or a callable")
        self.block_name = block_name
        self.recording = False
        self.mode = "block"
        self._bank: list[Compiled] | None = None
        self._bank_text: list[str] = []
        self._mask: torch.Tensor | None = None
        self._inputs: list[np.ndarray] = []
        self._outputs: list[np.ndarray] = []
        self._out_dim: int | None = None

    # -- recording -----------------------------------------------------------

    def record(self, on: bool = True) -> "WrappedBlock":
        self.recording = on
        return self

    @property
    def n_recorded(self) -> int:
        return sum(a.shape[0] for a in self._inputs)

    def _run_block(self, x: torch.Tensor) -> torch.Tensor:
        if self._callable is not None:
            out = self._callable(x)
            if not isinstance(out, torch.Tensor):
                out = torch.as_tensor(np.asarray(out))
        else:
            out = self.block(x)
        return out

    def _run_symbolic(self, x: torch.Tensor) -> torch.Tensor:
        assert self._bank is not None
        with torch.no_grad():
            x64 = x.detach().to(torch.float64)
            cols = [fn(x64) for fn in self._bank]
            out = torch.stack(cols, dim=1)
        return out.to(x.dtype)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not isinstance(x, torch.Tensor):
            x = torch.as_tensor(np.asarray(x))
        if x.dim() != 2:
            raise ValueError(
                f"wrapped blocks take rank-2 batches (rows x features), got rank {x.dim()}"
            )
        if self.mode == "symbolic":
            out = self._run_symbolic(x)
        else:
            out = self._run_block(x)
        if out.dim() != 2:
            raise ValueError(
                f"wrapped blocks must return rank-2 batches, got rank {out.dim()}"
            )
        if self._mask is not None:
            if self._mask.shape[0] != out.shape[1]:
                raise ValueError(
                    f"prune mask covers {self._mask.shape[0]} dims, "
                    f"block produced {out.shape[1]}"
                )
            out = out * self._mask.to(dtype=out.dtype, device=out.device)
        self._out_dim = out.shape[1]
        if self.recording:
            # device-to-host transfer happens here; rows are stored in
            # float64 so downstream constant fitting keeps full precision
            self._inputs.append(x.detach().to("cpu", torch.float64).numpy().copy())
            self._outputs.append(out.detach().to("cpu", torch.float64).numpy().copy())
        return out

    # -- persistence ---------------------------------------------------------

    def flush(self, path) -> Path:
        """Write the recorded rows as an exchange-format directory and clear
        the buffer."""
        if not self._inputs:
            raise ValueError("nothing recorded: the buffer is empty")
        X = np.concatenate(self._inputs, axis=0)
        Y = np.concatenate(self._outputs, axis=0)
        write_table(path, X, Y)
        self._inputs.clear()
        self._outputs.clear()
        return Path(path)

    # -- symbolic switching ----------------------------------------------------

    def switch_to_symbolic(self, bank_path,
                           input_names: Sequence[str] | None = None) -> "WrappedBlock":
        """Replace the forward computation with the expressions in the bank
        file (one per line, line j producing output dimension j)."""
        lines = [ln.strip() for ln in Path(bank_path).read_text().splitlines()
                 if ln.strip()]
        if not lines:
            raise ValueError(f"expression bank {bank_path} is empty")
        compiled = []
        for lineno, line in enumerate(lines, start=1):
            try:
                compiled.append(compile_expression(line, input_names))
            except BankParseError as exc:
                raise ValueError(f"{bank_path}:{lineno}: {exc}") from exc
        if self._out_dim is not None and len(compiled) != self._out_dim:
            raise ValueError(
                f"bank holds {len(compiled)} expressions but the block "
                f"produces {self._out_dim} outputs"
            )
        self._bank = compiled
        self._bank_text = lines
        self.mode = "symbolic"
        return self

    def switch_to_block(self) -> "WrappedBlock":
        """Restore the original component's forward computation."""
        self.mode = "block"
        return self

    # -- pruning ----------------------------------------------------------------

    def apply_prune_mask(self, mask) -> "WrappedBlock":
        """Zero the masked output dimensions in every forward pass.

        ``mask`` is boolean per output dimension, True = keep. Composes
        with recording: recorded outputs are the masked outputs."""
        mask = torch.as_tensor(np.asarray(mask, dtype=bool))
        if mask.dim() != 1:
            raise ValueError("mask must be 1-D over output dimensions")
        if self._out_dim is not None and mask.shape[0] != self._out_dim:
            raise ValueError(
                f"mask covers {mask.shape[0]} dims, block produces {self._out_dim}"
            )
        self._mask = mask
        return self

    def clear_prune_mask(self) -> "WrappedBlock":
        self._mask = None
        return self


def wrap(component, block_name: str = "block") -> WrappedBlock:
    """Wrap a component for recording and symbolic replacement."""
    return WrappedBlock(component, block_name)
