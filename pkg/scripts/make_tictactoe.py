"""Regenerate the UCI tic-tac-toe endgame table.

Every board reachable at the end of a game (a win, or a full board) with x
moving first. ``positive`` means x has three in a row. Rows are written in
lexicographic board order, with squares as x/o/b.
"""

import csv
import sys

SQUARES = [f"{r}-{c}-square" for r in ("top", "middle", "bottom")
           for c in ("left", "middle", "right")]
LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]


def wins(board, player):
    return any(all(board[i] == player for i in line) for line in LINES)


def endgames():
    seen = set()

    def play(board, player):
        if wins(board, "x") or wins(board, "o") or "b" not in board:
            seen.add(tuple(board))
            return
        for i, cell in enumerate(board):
            if cell == "b":
                board[i] = player
                play(board, "o" if player == "x" else "x")
                board[i] = "b"

    play(["b"] * 9, "x")
    return sorted(seen)


def main(path):
    boards = endgames()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SQUARES + ["Class"])
        for b in boards:
            w.writerow(list(b) + ["positive" if wins(b, "x") else "negative"])
    print(f"{len(boards)} boards, {sum(wins(b, 'x') for b in boards)} positive")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tic-tac-toe.csv")
