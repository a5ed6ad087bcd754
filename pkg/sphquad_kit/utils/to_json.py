import json


def to_json(s: str) -> dict:
    """
    Parse a tool input into a dictionary.

    Accepts strict JSON as well as the loose `{key1:value1,key2:value2}` form,
    where integer-looking values become ints and other values stay strings.

    Raises:
        ValueError: If the string cannot be parsed to a dictionary.
    """
    try:
        text = s.strip()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = {}
            for pair in text[1:-1].split(","):
                key, value = map(str.strip, pair.split(":", 1))
                if not key:
                    raise ValueError("Invalid key-value pair format")
                obj[key] = int(value) if value.lstrip("-").isdigit() else value
        if not isinstance(obj, dict):
            raise ValueError("input is not an object")
        return obj
    except Exception as e:
        raise ValueError(f"Failed to parse string to JSON:{e}")
