"""Adapter exposing HuggingFace sequence-classification checkpoints to the
analysis pipeline.

Only encoder-style architectures whose base model has ``embeddings`` and
``encoder.layer`` submodules are supported (BERT, RoBERTa and DeBERTa
families cover every published NLI checkpoint we compare against). torch and
transformers are imported at construction time, not at module import.

Layer indexing convention: coordinate layer ``l`` addresses the ``l``-th
hidden-state tensor, so layer 0 is the embedding output and layer
``num_hidden_layers`` is the final encoder output. ``meta().n_layers`` is
therefore ``num_hidden_layers + 1``, matching the built-in models where the
embedding is layer 0.
"""

import os

from distcma import _core

_CANONICAL = ("entailment", "neutral", "contradiction")


class HFCheckpointAdapter(_core.ModelAdapter):
    def __init__(self, name_or_path, device="cpu", max_length=256, cache_dir=None):
        super().__init__()
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        if cache_dir is None:
            cache_dir = os.environ.get("DISTCMA_CACHE")
        self._name = str(name_or_path)
        self._tokenizer = AutoTokenizer.from_pretrained(
            name_or_path, cache_dir=cache_dir
        )
        self._model = AutoModelForSequenceClassification.from_pretrained(
            name_or_path, cache_dir=cache_dir
        )
        self._model.to(device).eval()
        self._device = device
        self._max_length = max_length

        config = self._model.config
        id2label = {i: str(v).lower() for i, v in config.id2label.items()}
        try:
            self._label_index = {
                name: next(i for i, v in id2label.items() if v == name)
                for name in _CANONICAL
            }
        except StopIteration:
            raise ValueError(
                f"{self._name}: id2label {config.id2label} does not name all of "
                f"{_CANONICAL}"
            )

        base = self._model.base_model
        if not hasattr(base, "embeddings") or not hasattr(base, "encoder"):
            raise ValueError(
                f"{self._name}: unsupported architecture, expected an encoder "
                "model with embeddings and encoder submodules"
            )
        self._embeddings = base.embeddings
        self._encoder_layers = list(base.encoder.layer)
        self._n_states = len(self._encoder_layers) + 1

    # -- adapter contract --

    def meta(self):
        m = _core.ModelMeta()
        m.name = self._name
        m.n_layers = self._n_states
        m.hidden_size = int(self._model.config.hidden_size)
        m.n_parameters = sum(p.numel() for p in self._model.parameters())
        m.vocab_size = int(self._model.config.vocab_size)
        m.thread_safe = False
        return m

    def predict(self, pair):
        inputs = self._encode(pair)
        with self._torch.no_grad():
            logits = self._model(**inputs).logits[0]
        return self._to_distribution(logits)

    def predict_with_capture(self, pair, spec):
        spec.validate(self._n_states, int(self._model.config.hidden_size))
        inputs = self._encode(pair)
        with self._torch.no_grad():
            out = self._model(**inputs, output_hidden_states=True)
        hidden = out.hidden_states  # tuple of [1, seq, hidden], len n_states
        snapshot = _core.ActivationSnapshot()
        snapshot.coords = list(spec.coords)
        snapshot.seq_len = int(inputs["input_ids"].shape[1])
        snapshot.values = [
            hidden[c.layer][0, :, c.neuron].tolist() for c in spec.coords
        ]
        return self._to_distribution(out.logits[0]), snapshot

    def predict_with_patch(self, pair, snapshot, alignment):
        snapshot.validate()
        inputs = self._encode(pair)
        seq_len = int(inputs["input_ids"].shape[1])
        if alignment == _core.Alignment.strict and seq_len != snapshot.seq_len:
            raise ValueError(
                f"strict alignment: snapshot covers {snapshot.seq_len} positions "
                f"but the input has {seq_len}"
            )
        limit = min(seq_len, snapshot.seq_len)

        by_layer = {}
        for i, coord in enumerate(snapshot.coords):
            if not 0 <= coord.layer < self._n_states:
                raise ValueError(f"coordinate {coord} out of range")
            by_layer.setdefault(coord.layer, []).append(
                (coord.neuron, snapshot.values[i])
            )

        def patch(tensor, entries):
            patched = tensor.clone()
            for neuron, values in entries:
                for t in range(limit):
                    patched[0, t, neuron] = values[t]
            return patched

        handles = []
        try:
            for layer, entries in by_layer.items():
                if layer == 0:
                    module = self._embeddings
                else:
                    module = self._encoder_layers[layer - 1]

                def hook(_module, _inputs, output, entries=entries):
                    if isinstance(output, tuple):
                        return (patch(output[0], entries),) + output[1:]
                    return patch(output, entries)

                handles.append(module.register_forward_hook(hook))
            with self._torch.no_grad():
                logits = self._model(**inputs).logits[0]
        finally:
            for h in handles:
                h.remove()
        return self._to_distribution(logits)

    # -- helpers --

    def _encode(self, pair):
        return self._tokenizer(
            pair.premise,
            pair.hypothesis,
            return_tensors="pt",
            truncation=True,
            max_length=self._max_length,
        ).to(self._device)

    def _to_distribution(self, logits):
        probs = self._torch.softmax(logits.float(), dim=-1).tolist()
        dist = _core.LabelDistribution(
            probs[self._label_index["entailment"]],
            probs[self._label_index["neutral"]],
            probs[self._label_index["contradiction"]],
        )
        dist.validate()
        return dist
