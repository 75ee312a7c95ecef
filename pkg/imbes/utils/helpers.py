import os


def create_dirs(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def read_text(path: str) -> str:
    with open(path, mode="r") as source:
        return source.read()
