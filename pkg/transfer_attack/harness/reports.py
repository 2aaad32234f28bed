"""
Per-image report tables and the summaries computed from them.
"""


import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

FOOLED_SUFFIX = "_fooled"

BASE_COLUMNS = ["image_id", "stream", "epsilon", "ssim"]


def fooled_column(target: str) -> str:
    return f"{target}{FOOLED_SUFFIX}"


class ExperimentReport:
    """
    One row per image: the stream that produced it, its budget, its SSIM to
    the original, and whether every target was fooled. Every aggregate is
    computed from the rows.
    """

    def __init__(self, rows: pd.DataFrame, target_names: Sequence[str]):
        """
        Args:
            rows: The per-image table.
            target_names: The targets, in column order.

        """
        columns = BASE_COLUMNS + [fooled_column(t) for t in target_names]
        missing = set(columns) - set(rows.columns)
        if missing:
            raise ValueError(f"Report is missing columns {sorted(missing)}.")

        self.__rows = rows[columns].reset_index(drop=True)
        self.__target_names = tuple(target_names)

    @classmethod
    def from_records(
        cls,
        records: Sequence[Mapping[str, Any]],
        target_names: Sequence[str],
    ) -> "ExperimentReport":
        """
        Args:
            records: One mapping per image, keyed by column name.
            target_names: The targets, in column order.

        Returns:
            The report.

        """
        columns = BASE_COLUMNS + [fooled_column(t) for t in target_names]
        rows = pd.DataFrame.from_records(list(records), columns=columns)
        for target in target_names:
            rows[fooled_column(target)] = rows[fooled_column(target)].astype(
                bool
            )
        return cls(rows, target_names)

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "ExperimentReport":
        """
        Loads a report written by `write_csv`.

        Args:
            path: The CSV file.

        Returns:
            The report.

        """
        rows = pd.read_csv(
            path, float_precision="round_trip", dtype={"image_id": str}
        )
        targets = [
            column[: -len(FOOLED_SUFFIX)]
            for column in rows.columns
            if column.endswith(FOOLED_SUFFIX)
        ]
        return cls(rows, targets)

    @property
    def rows(self) -> pd.DataFrame:
        return self.__rows.copy()

    @property
    def target_names(self) -> Sequence[str]:
        return self.__target_names

    def __len__(self) -> int:
        return len(self.__rows)

    def __fooled(self) -> np.ndarray:
        columns = [fooled_column(t) for t in self.__target_names]
        return self.__rows[columns].to_numpy(dtype=bool)

    def aggregates(self) -> Dict[str, Any]:
        """
        Returns:
            The misclassification rate per target, the average SSIM over
            all images and over images that fooled every target, and the
            score.

        """
        if len(self) == 0:
            return dict(
                n_images=0,
                misclassification_rate={t: None for t in self.__target_names},
                average_ssim=None,
                average_ssim_successful=None,
                score=0.0,
            )

        fooled = self.__fooled()
        ssim = self.__rows["ssim"].to_numpy(dtype=np.float64)
        successful = fooled.all(axis=1)
        return dict(
            n_images=len(self),
            misclassification_rate={
                target: float(100.0 * fooled[:, i].mean())
                for i, target in enumerate(self.__target_names)
            },
            average_ssim=float(ssim.mean()),
            average_ssim_successful=(
                float(ssim[successful].mean()) if successful.any() else None
            ),
            score=float((ssim[:, np.newaxis] * fooled).sum()),
        )

    def write_csv(self, path: Union[str, Path]) -> None:
        self.__rows.to_csv(path, index=False)


def write_ablation_csv(
    views: Mapping[str, ExperimentReport], path: Union[str, Path]
) -> None:
    """
    Writes several reports into one table with a leading `view` column.

    Args:
        views: The reports, keyed by view name.
        path: The CSV file.

    """
    frames = []
    for view, report in views.items():
        rows = report.rows
        rows.insert(0, "view", view)
        frames.append(rows)
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)


def selection_summary(rows: List[Mapping[str, Any]]) -> Dict[str, Any]:
    """
    Summarizes per-image selection results.

    Args:
        rows: One mapping per successfully selected image, with the keys
            `score_mntd_pgd`, `score_sg_pgd` and `score_selected`.

    Returns:
        The per-stream and selected-set scores.

    """
    table = pd.DataFrame.from_records(
        rows, columns=["score_mntd_pgd", "score_sg_pgd", "score_selected"]
    )
    return dict(
        n_images=len(table),
        scores=dict(
            mntd_pgd=float(table["score_mntd_pgd"].sum()),
            sg_pgd=float(table["score_sg_pgd"].sum()),
            selected=float(table["score_selected"].sum()),
        ),
    )


def write_json(
    document: Mapping[str, Any], path: Union[str, Path]
) -> None:
    """
    Writes a JSON document with sorted keys.
    """
    with open(path, "w") as out_file:
        json.dump(document, out_file, indent=2, sort_keys=True)
        out_file.write("\n")


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path) as in_file:
        return json.load(in_file)
