import sys

import termtables

from .constants import LOGS_PATH
from .helpers import create_dirs

BLUE = "\033[94m"
GREEN = "\033[92m"
YELLOW = "\033[93m"
RED = "\033[91m"
GREY = "\033[90m"

BOLD = "\033[1m"

END = "\033[0m"

REPORT_HEADER = ["#", "Criterion", "Status", "Details"]


class Logger:
    def __init__(self, log_file, stream=None):
        self.log_file = log_file
        self.stream = stream

    # log to file
    def log(self, text):
        if not self.log_file:
            return
        create_dirs(self.log_file)
        with open(self.log_file, mode="a") as logs:
            logs.write(text + "\n")

    # print to stderr, stdout carries artifacts
    def stdout(self, text, overwrite=False):
        end_char = "\r" if overwrite else "\n"
        print(text, end=end_char, flush=overwrite, file=self.stream or sys.stderr)

    def _emit(self, prefix, color, text, value=None, overwrite=False):
        log_text = prefix + text
        stdout_text = self.hl(f" {prefix}", color) + text

        if value is not None:
            log_text = self.cln(log_text, value)
            stdout_text = self.cln(stdout_text, self.hl(value, BOLD))

        self.log(log_text)
        if overwrite:
            self.stdout(stdout_text + (" " * 40), overwrite=True)
        else:
            self.stdout(stdout_text)

    def info(self, text, value=None):
        self._emit("🔵 [INFO] ", BLUE, text, value)

    def update_info(self, text, value=None):
        self._emit("🔵 [INFO] ", BLUE, text, value, overwrite=True)

    def okay(self, text, value=None):
        self._emit("🟢 [OKAY] ", GREEN, text, value)

    def warn(self, text, value=None):
        self._emit("🟠 [WARN] ", YELLOW, text, value)

    def error(self, text, value=None):
        self._emit("🔴 [ERROR] ", RED, text, value)

    def report_table(self, table):
        log_table = termtables.to_string(
            table,
            header=REPORT_HEADER,
            style=termtables.styles.rounded_double,
        )
        self.log(log_table)

        stdout_table = [self.color_row(row) for row in table]
        table_colored_string = termtables.to_string(
            stdout_table,
            header=REPORT_HEADER,
            style=termtables.styles.rounded_double,
        )

        self.stdout(table_colored_string)

    def color_row(self, row):
        status = row[2]
        hlcolor = {"pass": GREEN, "fail": RED}.get(status, GREY)
        return [self.hl(cell, hlcolor) for cell in row]

    def hl(self, text, color=BOLD):
        return f"{color}{text}{END}"

    def hlgreen(self, text):
        return self.hl(text, GREEN)

    def hlred(self, text):
        return self.hl(text, RED)

    def cln(self, text1, text2):
        return f"{text1}: {text2}"

    def divider(self):
        self.log(" - +" * 20)
        self.stdout((self.hlred(" -") + self.hlgreen(" +")) * 20)


logger = Logger(LOGS_PATH)
