import csv
import json
import logging
import os
from fractions import Fraction
from pathlib import Path

import markdown2

from src.excel_generator import ExcelGenerator
from src.numeric import Enclosure, format_scalar
from src.utils.helpers import get_output_dir


def _plain(value):
    if isinstance(value, (Fraction, Enclosure)):
        return format_scalar(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float):
        return format_scalar(value)
    return value


class Reporter:
    """
    Renders the results of one command as a markdown report and exports it.
    results holds a title, a header of run settings, named tables of rows
    and, for spectral runs, the report behind the SVG plot.
    """

    def __init__(self, results, config, output_dir=None):
        self.results = results
        self.config = config
        self.output_dir = Path(output_dir) if output_dir else get_output_dir(config)

    def _table(self, rows):
        if not rows:
            return "_No rows._\n\n"
        columns = list(rows[0].keys())
        report = "| " + " | ".join(columns) + " |\n"
        report += "|" + "---|" * len(columns) + "\n"
        for row in rows:
            report += "| " + " | ".join(str(_plain(row.get(c, ""))) for c in columns) + " |\n"
        return report + "\n"

    def generate_report(self):
        report = f"# {self.results['title']}\n\n"
        report += "| Setting | Value |\n|---|---|\n"
        for key, value in self.results.get("header", {}).items():
            report += f"| {key} | {_plain(value)} |\n"
        report += "\n"
        for note in self.results.get("notes", []):
            report += f"- {note}\n"
        if self.results.get("notes"):
            report += "\n"
        for name, rows in self.results.get("tables", {}).items():
            report += f"## {name}\n\n"
            report += self._table(rows)
        verdict = self.results.get("passed")
        if verdict is not None:
            report += f"**Verification: {'PASSED' if verdict else 'FAILED'}**\n"
        return report

    def _json_payload(self):
        payload = {k: v for k, v in self.results.items() if k != "plot"}
        return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"

    def _write_csv(self, filename):
        written = []
        for name, rows in self.results.get("tables", {}).items():
            if not rows:
                continue
            file_path = self.output_dir / f"{filename}_{name}.csv"
            with open(file_path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
                writer.writeheader()
                for row in rows:
                    writer.writerow({k: _plain(v) for k, v in row.items()})
            written.append(str(file_path.resolve()))
        return written

    def export_report(self, report_content, filename="spectra_report", formats=("md",)):
        """
        Exports the report to a file in the specified formats.
        Returns a tuple of (list of successful files, list of error messages).
        """
        os.makedirs(self.output_dir, exist_ok=True)
        successful_files = []
        error_messages = []

        logging.info(f"Exporting report to {self.output_dir.resolve()}...")
        for fmt in formats:
            try:
                if fmt == "md":
                    file_path = self.output_dir / f"{filename}.md"
                    with open(file_path, "w") as f:
                        f.write(report_content)
                    successful_files.append(str(file_path.resolve()))
                elif fmt == "html":
                    file_path = self.output_dir / f"{filename}.html"
                    html_content = markdown2.markdown(report_content, extras=["tables", "fenced-code-blocks"])
                    with open(file_path, "w") as f:
                        f.write(html_content)
                    successful_files.append(str(file_path.resolve()))
                elif fmt == "json":
                    file_path = self.output_dir / f"{filename}.json"
                    with open(file_path, "w") as f:
                        f.write(self._json_payload())
                    successful_files.append(str(file_path.resolve()))
                elif fmt == "csv":
                    successful_files.extend(self._write_csv(filename))
                elif fmt == "excel":
                    file_path = self.output_dir / f"{filename}.xlsx"
                    ExcelGenerator().generate_excel(self.results, file_path)
                    successful_files.append(str(file_path.resolve()))
                elif fmt == "svg":
                    if self.results.get("plot") is None:
                        logging.info("No spectral data in this run; skipping the SVG plot.")
                        continue
                    from src.plotter import emit_plot
                    successful_files.append(emit_plot(self.results["plot"], self.output_dir / f"{filename}.svg"))
                else:
                    msg = f"Format '{fmt}' not supported."
                    logging.warning(msg)
                    error_messages.append(msg)
            except OSError as e:
                msg = f"Error exporting report to {fmt}: {e}"
                logging.error(msg)
                error_messages.append(msg)

        for file_path in successful_files:
            logging.info(f"Report exported to {file_path}")
        logging.info("Report export process complete.")
        return successful_files, error_messages
