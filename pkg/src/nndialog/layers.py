"""Neural building blocks: embeddings, LSTM, bi-LSTM encoder, MLP heads,
gradient clipping, Adam.

All modules register parameters in a flat name -> Tensor dict so training,
checkpointing, and gradient checks can walk them in sorted order.
"""

import numpy as np

from nndialog import autodiff as ad
from nndialog import kernels
from nndialog.errors import ConfigError, ShapeError

WEIGHT_INIT_RANGE = 0.08
EMBEDDING_INIT_RANGE = 0.25
PAD_INDEX = 0
UNK_INDEX = 1


def _uniform(rng, shape, scale):
    return rng.uniform(-scale, scale, size=shape)


class LstmParams:
    """One LSTM cell's weights; gates packed [input, forget, cell, output]."""

    def __init__(self, input_dim, hidden, rng):
        self.input_dim = input_dim
        self.hidden = hidden
        self.wx = ad.parameter(_uniform(rng, (4 * hidden, input_dim), WEIGHT_INIT_RANGE))
        self.wh = ad.parameter(_uniform(rng, (4 * hidden, hidden), WEIGHT_INIT_RANGE))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0  # forget gate opens by default
        self.b = ad.parameter(bias)

    def params(self):
        return {"wx": self.wx, "wh": self.wh, "b": self.b}


def lstm_step(params, x, h_prev, c_prev, mask=None):
    """One masked LSTM step over a [B, D] batch; returns (h, c)."""
    if mask is None:
        mask = np.ones(x.data.shape[0])
    pre = ad.add(ad.linear(x, params.wx, params.b), ad.linear(h_prev, params.wh))
    return ad.lstm_gates(pre, h_prev, c_prev, mask)


class Embedding:
    """Token embedding table; row 0 is padding and never receives updates."""

    def __init__(self, vocab_size, dim, rng):
        if vocab_size < 2:
            raise ConfigError("vocabulary must at least hold PAD and UNK")
        table = _uniform(rng, (vocab_size, dim), EMBEDDING_INIT_RANGE)
        table[PAD_INDEX] = 0.0
        self.dim = dim
        self.table = ad.parameter(table)

    @property
    def vocab_size(self):
        return self.table.data.shape[0]

    def lookup(self, idx):
        return ad.take_rows(self.table, idx)

    def zero_pad_grad(self):
        if self.table.grad is not None:
            self.table.grad[PAD_INDEX] = 0.0

    def params(self):
        return {"table": self.table}


def load_word_vectors(path, token_to_index, table):
    """Overwrite embedding rows with vectors from a text file.

    File format: one line per word, the token then dim whitespace-separated
    decimals. Tokens absent from the vocabulary are skipped; vocabulary
    tokens absent from the file keep their random initialization.
    Returns the number of rows replaced.
    """
    dim = table.shape[1]
    loaded = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ConfigError(
                    f"{path}:{lineno}: expected token + {dim} values, got {len(parts) - 1}"
                )
            idx = token_to_index.get(parts[0])
            if idx is None or idx == PAD_INDEX:
                continue
            table[idx] = np.array([float(v) for v in parts[1:]])
            loaded += 1
    return loaded


class BiLstmEncoder:
    """Encodes a token sequence into [last forward state, first-position
    backward state], the 2H utterance vector consumed by the dialog LSTM."""

    def __init__(self, input_dim, hidden, rng):
        self.hidden = hidden
        self.fwd = LstmParams(input_dim, hidden, rng)
        self.bwd = LstmParams(input_dim, hidden, rng)

    def encode_batch(self, embedding, tokens, mask):
        """tokens [B, T] int, mask [B, T] float; returns U [B, 2H].

        Masked steps freeze the running state, so after the forward scan h
        holds the state at each row's last real token, and after the
        reversed scan h holds the state at position 1.
        """
        tokens = np.asarray(tokens)
        if tokens.ndim != 2 or tokens.shape[1] == 0:
            raise ShapeError(f"encoder needs [B, T>=1] tokens, got {tokens.shape}")
        nbatch, nsteps = tokens.shape
        xs = [embedding.lookup(tokens[:, t]) for t in range(nsteps)]
        h = c = ad.tensor(np.zeros((nbatch, self.hidden)))
        for t in range(nsteps):
            h, c = lstm_step(self.fwd, xs[t], h, c, mask[:, t])
        forward_last = h
        h = c = ad.tensor(np.zeros((nbatch, self.hidden)))
        for t in reversed(range(nsteps)):
            h, c = lstm_step(self.bwd, xs[t], h, c, mask[:, t])
        backward_first = h
        return ad.concat([forward_last, backward_first], axis=1)

    def encode(self, embedding, token_ids):
        """Single-utterance convenience; returns U [2H] as a 1-row batch."""
        tokens = np.asarray(token_ids).reshape(1, -1)
        mask = np.ones_like(tokens, dtype=np.float64)
        return self.encode_batch(embedding, tokens, mask)

    def params(self):
        out = {}
        for prefix, cell in (("fwd", self.fwd), ("bwd", self.bwd)):
            for name, p in cell.params().items():
                out[f"{prefix}.{name}"] = p
        return out


class MlpHead:
    """Feed-forward head producing logits; tanh hidden layers, linear output.

    With zero_output the final weight matrix starts at zero, so the head
    emits exactly uniform distributions until its first update (hidden
    layers stay randomly initialized, so nothing is symmetric-trapped).
    """

    def __init__(self, input_dim, hidden_sizes, arity, rng, zero_output=False):
        if arity < 1:
            raise ConfigError("head arity must be >= 1")
        self.arity = arity
        self.weights = []
        self.biases = []
        sizes = list(hidden_sizes) + [arity]
        prev = input_dim
        for i, size in enumerate(sizes):
            if zero_output and i == len(sizes) - 1:
                weight = np.zeros((size, prev))
            else:
                weight = _uniform(rng, (size, prev), WEIGHT_INIT_RANGE)
            self.weights.append(ad.parameter(weight))
            self.biases.append(ad.parameter(np.zeros(size)))
            prev = size

    def logits(self, x):
        out = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out = ad.linear(out, w, b)
            if i != last:
                out = ad.tanh(out)
        return out

    def params(self):
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"l{i}.w"] = w
            out[f"l{i}.b"] = b
        return out


def clip_by_global_norm(grads, max_norm):
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the pre-clip global norm.
    """
    total = 0.0
    for g in grads:
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for g in grads:
            g *= factor
    return norm


class Adam:
    """Bias-corrected Adam over a named parameter dict, sorted-order walk."""

    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._params = dict(named_params)
        self._moments = {
            name: (np.zeros_like(p.data), np.zeros_like(p.data))
            for name, p in self._params.items()
        }

    def step(self):
        self.t += 1
        for name in sorted(self._params):
            p = self._params[name]
            if p.grad is None:
                continue
            m, v = self._moments[name]
            kernels.adam_step(
                p.data, p.grad, m, v, self.t, self.lr, self.beta1, self.beta2, self.eps
            )

    def zero_grads(self):
        for p in self._params.values():
            p.grad = None
