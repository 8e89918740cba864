"""Small encoder-decoder transformer over a shared token vocabulary."""

import math

import torch
from torch import nn

from .data import TrainerConfig
from .vocab import PAD_ID


class TabTransformer(nn.Module):
    def __init__(self, vocab_size: int, config: TrainerConfig):
        super().__init__()
        self.config = config
        d = config.model_dim
        # v1 targets carry two tokens per source note, so give the decoder
        # twice the input budget
        self.max_positions = 2 * config.max_input_len + 2
        self.token_emb = nn.Embedding(vocab_size, d, padding_idx=PAD_ID)
        self.pos_emb = nn.Embedding(self.max_positions, d)
        self.transformer = nn.Transformer(
            d_model=d,
            nhead=config.heads,
            num_encoder_layers=config.layers,
            num_decoder_layers=config.layers,
            dim_feedforward=config.feedforward_dim,
            dropout=config.dropout,
            batch_first=True,
        )
        self.out = nn.Linear(d, vocab_size)
        self.scale = math.sqrt(d)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        if ids.size(1) > self.max_positions:
            raise ValueError(
                f"sequence of {ids.size(1)} tokens exceeds the position "
                f"table of {self.max_positions}"
            )
        pos = torch.arange(ids.size(1), device=ids.device)
        return self.token_emb(ids) * self.scale + self.pos_emb(pos)

    def encode(self, src: torch.Tensor) -> torch.Tensor:
        return self.transformer.encoder(
            self._embed(src), src_key_padding_mask=src.eq(PAD_ID)
        )

    def decode(
        self, tgt_in: torch.Tensor, memory: torch.Tensor, src: torch.Tensor
    ) -> torch.Tensor:
        # bool mask, matching the key padding masks (True = blocked)
        size = tgt_in.size(1)
        causal = torch.triu(
            torch.ones(size, size, dtype=torch.bool, device=tgt_in.device),
            diagonal=1,
        )
        hidden = self.transformer.decoder(
            self._embed(tgt_in),
            memory,
            tgt_mask=causal,
            tgt_key_padding_mask=tgt_in.eq(PAD_ID),
            memory_key_padding_mask=src.eq(PAD_ID),
        )
        return self.out(hidden)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits, [batch, target length, vocab]."""
        return self.decode(tgt_in, self.encode(src), src)
