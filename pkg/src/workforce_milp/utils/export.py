"""Module for exporting evaluation tables to different formats."""

import io
import logging
import zipfile
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd
from openpyxl.xml.functions import tostring

logger = logging.getLogger(__name__)

# Fixed stamps so that equal reports give byte-identical workbooks
WORKBOOK_TIMESTAMP = datetime(2000, 1, 1)
ZIP_TIMESTAMP = (1980, 1, 1, 0, 0, 0)
CORE_PROPERTIES = "docProps/core.xml"


def _write_reproducible_workbook(frame: pd.DataFrame, output_path: Path) -> None:
    buffer = io.BytesIO()
    with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
        frame.to_excel(writer, index=False)
        book = writer.book
    # openpyxl stamps the save time into the core properties
    book.properties.created = WORKBOOK_TIMESTAMP
    book.properties.modified = WORKBOOK_TIMESTAMP
    core = tostring(book.properties.to_tree())

    with zipfile.ZipFile(buffer) as source, zipfile.ZipFile(
        output_path, "w", zipfile.ZIP_DEFLATED
    ) as target:
        for entry in source.infolist():
            data = core if entry.filename == CORE_PROPERTIES else source.read(entry.filename)
            info = zipfile.ZipInfo(entry.filename, date_time=ZIP_TIMESTAMP)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = entry.external_attr
            target.writestr(info, data)


def export_to_excel(rows: List[Dict[str, Any]], output_path: Union[str, Path]) -> bool:
    """
    Export a report table to an Excel file.

    The workbook carries fixed timestamps, so the same rows always give the same bytes.

    Args:
        rows: One dictionary per table row
        output_path: Path where the Excel file should be saved

    Returns:
        bool: True if export was successful, False otherwise
    """
    try:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        if not rows:
            logger.error("No rows to export to Excel")
            return False

        _write_reproducible_workbook(pd.DataFrame(rows), output_path)
        logger.info(f"Successfully exported report to Excel: {output_path}")
        return True

    except Exception as e:
        logger.error(f"Failed to export to Excel: {e}")
        return False


def export_to_csv(rows: List[Dict[str, Any]], output_path: Union[str, Path]) -> bool:
    """
    Export a report table to a CSV file.

    Args:
        rows: One dictionary per table row
        output_path: Path where the CSV file should be saved

    Returns:
        bool: True if export was successful, False otherwise
    """
    try:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        if not rows:
            logger.error("No rows to export to CSV")
            return False

        pd.DataFrame(rows).to_csv(output_path, index=False, encoding="utf-8")
        logger.info(f"Successfully exported report to CSV: {output_path}")
        return True

    except Exception as e:
        logger.error(f"Failed to export to CSV: {e}")
        return False


def format_table(rows: List[Dict[str, Any]]) -> str:
    """Render rows as an aligned plain-text table."""
    if not rows:
        return ""
    return pd.DataFrame(rows).fillna("-").to_string(index=False)
