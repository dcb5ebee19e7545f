from typing import Any, Dict, List

import json

from .errors import ConfigurationError

__all__ = (
    "deep_update",
    "nested_set",
    "parse_override",
)


def deep_update(
    src: Dict[str, Any], dest: Dict[str, Any], strict: bool = False, _prefix: str = ""
) -> Dict[str, Any]:
    """
    Similar to ``dict.update``, except that we also ``deep_update``
    any dictionaries we find inside of the destination. This is how user
    configuration is layered on top of the packaged defaults.

    Args:
        src: The dictionary which should be used for updates in ``dest``
        dest: The target which should be updated in place. This instance is also returned.
        strict: If set, keys of ``src`` which ``dest`` does not know about are rejected.

    Returns:
        The merged dictionaries.

    Raises:
        ConfigurationError: In strict mode, for the first unknown key.
    """

    for k, v in src.items():
        key_path = f"{_prefix}{k}"
        if strict and k not in dest:
            raise ConfigurationError(f"Unknown configuration key '{key_path}'")

        if isinstance(v, dict) and isinstance(dest.get(k, {}), dict):
            if k not in dest:
                dest[k] = {}

            deep_update(v, dest[k], strict=strict, _prefix=f"{key_path}.")
        else:
            dest[k] = v
    return dest


def nested_set(tree: Dict[str, Any], dotted_key: str, value: Any) -> Dict[str, Any]:
    keys: List[str] = dotted_key.split(".")
    node = tree
    for i, k in enumerate(keys[:-1]):
        if not isinstance(node.get(k), dict):
            raise ConfigurationError(f"Unknown configuration section '{'.'.join(keys[: i + 1])}'")
        node = node[k]

    if keys[-1] not in node:
        raise ConfigurationError(f"Unknown configuration key '{dotted_key}'")

    node[keys[-1]] = value
    return tree


def parse_override(expression: str):
    """
    Splits ``section.key=value`` and decodes the value as JSON when possible,
    so ``train.epochs=5`` gives an int and ``source=data.chn`` stays a string.
    """
    if "=" not in expression:
        raise ConfigurationError(f"Override '{expression}' is not of the form key=value")

    key, raw = expression.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw

    return key.strip(), value
