from pygments import highlight
from pygments.lexers.data import JsonLexer
from pygments.formatters.terminal import TerminalFormatter
import json
import sys

# ANSI color codes
ERROR_COLOR = "\033[91m"  # Red for errors
WARNING_COLOR = "\033[33m"  # Yellow for flagged results
SUCCESS_COLOR = "\033[92m"  # Green for success messages
RESET = "\033[0m"


def colorize_error(text):
    return f"{ERROR_COLOR}{text}{RESET}"

def colorize_warning(text):
    return f"{WARNING_COLOR}{text}{RESET}"

def colorize_success(text):
    return f"{SUCCESS_COLOR}{text}{RESET}"

def highlight_json(data, stream=None):
    """Pretty JSON, syntax-highlighted only when ``stream`` is a terminal."""
    text = json.dumps(data, indent=2, sort_keys=True)
    stream = stream or sys.stdout
    if hasattr(stream, "isatty") and stream.isatty():
        return highlight(text, JsonLexer(), TerminalFormatter()).rstrip("\n")
    return text
