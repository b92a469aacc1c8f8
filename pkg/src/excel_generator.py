import openpyxl
from openpyxl.styles import Alignment, Font

from src.numeric import format_scalar

MAX_SHEET_NAME = 31


class ExcelGenerator:
    """Results workbook: a Run sheet with the settings and one sheet per table."""

    def generate_excel(self, results, output_excel_path):
        wb = openpyxl.Workbook()

        # Remove the default sheet
        if "Sheet" in wb.sheetnames:
            wb.remove(wb["Sheet"])

        self._create_run_sheet(wb, results)
        for name, rows in results.get("tables", {}).items():
            self._create_table_sheet(wb, name, rows)

        wb.save(output_excel_path)

    def _create_run_sheet(self, wb, results):
        ws = wb.create_sheet("Run")
        ws.append(["Title", results.get("title", "")])
        for key, value in results.get("header", {}).items():
            ws.append([key, self._cell(value)])
        if results.get("passed") is not None:
            ws.append(["Verification", "PASSED" if results["passed"] else "FAILED"])
        self._format_sheet(ws)

    def _create_table_sheet(self, wb, name, rows):
        ws = wb.create_sheet(name[:MAX_SHEET_NAME])
        if not rows:
            ws.append(["No rows"])
            return
        columns = list(rows[0].keys())
        ws.append(columns)
        for cell in ws[1]:
            cell.font = Font(bold=True)
        for row in rows:
            ws.append([self._cell(row.get(c)) for c in columns])
        self._format_sheet(ws)

    def _cell(self, value):
        if isinstance(value, (bool, int, str)) or value is None:
            return value
        if isinstance(value, (list, tuple, dict)):
            return str(value)
        return format_scalar(value)

    def _format_sheet(self, ws):
        for row in ws.iter_rows():
            for cell in row:
                cell.alignment = Alignment(wrap_text=True, vertical='top')

        for col in ws.columns:
            max_length = max((len(str(cell.value)) for cell in col if cell.value is not None), default=0)
            column = col[0].column_letter
            ws.column_dimensions[column].width = min(max_length + 2, 60)
