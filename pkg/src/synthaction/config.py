"""Line-oriented config files: `key = value` entries under [section] headers.

Blank lines and lines starting with '#' are ignored. Section and key names
must match the schema of the consuming command; unknown keys are errors.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    """Bad config syntax or unknown section/key."""


def parse_config_text(text: str, source: str = "<config>") -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    current_name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current_name = line[1:-1].strip()
            if not current_name:
                raise ConfigError(f"{source}:{lineno}: empty section name")
            if current_name in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section "
                                  f"[{current_name}]")
            current = {}
            sections[current_name] = current
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in current:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in "
                              f"[{current_name}]")
        current[key] = value
    return sections


def load_config(path) -> dict[str, dict[str, str]]:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


class SectionReader:
    """Typed access to one section, tracking which keys were consumed."""

    def __init__(self, name: str, values: dict[str, str]):
        self.name = name
        self.values = dict(values)
        self._seen: set[str] = set()

    def _raw(self, key: str, default):
        self._seen.add(key)
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"[{self.name}] is missing required key {key!r}")
        return default

    def get_str(self, key: str, default=None) -> str:
        val = self._raw(key, default)
        return val if isinstance(val, str) else val

    def get_int(self, key: str, default=None) -> int:
        val = self._raw(key, default)
        if isinstance(val, str):
            try:
                return int(val)
            except ValueError:
                raise ConfigError(f"[{self.name}] {key}: expected an integer, "
                                  f"got {val!r}") from None
        return val

    def get_float(self, key: str, default=None) -> float:
        val = self._raw(key, default)
        if isinstance(val, str):
            try:
                return float(val)
            except ValueError:
                raise ConfigError(f"[{self.name}] {key}: expected a number, "
                                  f"got {val!r}") from None
        return val

    def get_list(self, key: str, default=None, convert=str) -> list:
        val = self._raw(key, default)
        if isinstance(val, str):
            items = [item.strip() for item in val.split(",") if item.strip()]
            try:
                return [convert(item) for item in items]
            except ValueError:
                raise ConfigError(f"[{self.name}] {key}: bad list item in {val!r}") \
                    from None
        return list(val)

    def get_pair(self, key: str, default=None, convert=float) -> tuple:
        items = self.get_list(key, default=default, convert=convert)
        if len(items) != 2:
            raise ConfigError(f"[{self.name}] {key}: expected two values")
        return tuple(items)

    def finish(self) -> None:
        unknown = set(self.values) - self._seen
        if unknown:
            raise ConfigError(f"[{self.name}] has unknown keys: "
                              f"{', '.join(sorted(unknown))}")


class _Required:
    pass


_REQUIRED = _Required()
REQUIRED = _REQUIRED
