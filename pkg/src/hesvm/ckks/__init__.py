"""Leveled RNS-CKKS: parameters, encoding, keys, encryption and evaluation."""

from .context import CkksContext, gen_context
from .encoding import Plaintext, decode, encode, encode_constant
from .evaluator import (
    drop_to_level,
    eval_add,
    eval_add_scalar,
    eval_inner_product,
    eval_mat_vec,
    eval_mult_ct,
    eval_mult_integer,
    eval_mult_plain,
    eval_neg,
    eval_poly,
    eval_power,
    eval_rotate,
    eval_sub,
    rescale,
)
from .params import CkksParams, max_log_q, parse_security
from .scheme import Ciphertext, KeySet, KeySwitchKey, SecretKey, add_rotation_keys, decrypt, encrypt, keygen

__all__ = [
    "Ciphertext",
    "CkksContext",
    "CkksParams",
    "KeySet",
    "KeySwitchKey",
    "Plaintext",
    "SecretKey",
    "add_rotation_keys",
    "decode",
    "decrypt",
    "drop_to_level",
    "encode",
    "encode_constant",
    "encrypt",
    "eval_add",
    "eval_add_scalar",
    "eval_inner_product",
    "eval_mat_vec",
    "eval_mult_ct",
    "eval_mult_integer",
    "eval_mult_plain",
    "eval_neg",
    "eval_poly",
    "eval_power",
    "eval_rotate",
    "eval_sub",
    "gen_context",
    "keygen",
    "max_log_q",
    "parse_security",
    "rescale",
]
