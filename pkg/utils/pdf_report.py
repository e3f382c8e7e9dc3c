"""
PDF Scan Summary Generator for the Theta Laboratory
Renders a command's envelope and result table as a one-page PDF
"""

from datetime import datetime
from io import BytesIO

import pandas as pd
from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import mm
from reportlab.platypus import HRFlowable, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from utils.errors import ThetaLabError
from utils.serialization import ResultEnvelope, as_frame

MAX_ROWS = 40


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def generate_scan_summary(envelope: ResultEnvelope, max_rows: int = MAX_ROWS) -> BytesIO:
    """
    Generate a PDF summary of a command result.

    Args:
        envelope: Result envelope with a tabular (or single-report) payload
        max_rows: Rows of the table to include; the rest are elided

    Returns:
        BytesIO buffer containing the PDF
    """
    buffer = BytesIO()
    doc = SimpleDocTemplate(
        buffer,
        pagesize=landscape(A4),
        rightMargin=15*mm,
        leftMargin=15*mm,
        topMargin=15*mm,
        bottomMargin=15*mm
    )

    styles = getSampleStyleSheet()
    title_style = ParagraphStyle(
        'SummaryTitle',
        parent=styles['Heading1'],
        fontSize=20,
        textColor=colors.HexColor('#1e40af'),
        spaceAfter=8,
        alignment=TA_CENTER
    )
    heading_style = ParagraphStyle(
        'SummaryHeading',
        parent=styles['Heading2'],
        fontSize=13,
        textColor=colors.HexColor('#1e40af'),
        spaceBefore=12,
        spaceAfter=8
    )
    footer_style = ParagraphStyle(
        'Footer',
        parent=styles['Normal'],
        fontSize=8,
        textColor=colors.grey,
        alignment=TA_CENTER
    )

    content = [
        Paragraph(f"thetalab: {envelope.command}", title_style),
        HRFlowable(width="100%", thickness=2, color=colors.HexColor('#2563eb')),
        Spacer(1, 8),
        Paragraph("Run", heading_style),
    ]

    run_data = [
        ['Code version:', envelope.code_version],
        ['Timestamp:', envelope.timestamp],
        ['Wall time:', f"{envelope.wall_time_ms:.1f} ms"],
        ['Partial:', 'yes' if envelope.partial else 'no'],
    ]
    run_data += [[f"{k}:", _format_cell(v)] for k, v in envelope.config.items() if v is not None]
    run_table = Table(run_data, colWidths=[120, 400])
    run_table.setStyle(TableStyle([
        ('FONTNAME', (0, 0), (0, -1), 'Helvetica-Bold'),
        ('FONTNAME', (1, 0), (1, -1), 'Helvetica'),
        ('FONTSIZE', (0, 0), (-1, -1), 9),
        ('TEXTCOLOR', (0, 0), (0, -1), colors.HexColor('#374151')),
        ('BOTTOMPADDING', (0, 0), (-1, -1), 4),
        ('TOPPADDING', (0, 0), (-1, -1), 4),
        ('BACKGROUND', (0, 0), (-1, -1), colors.HexColor('#f9fafb')),
    ]))
    content.append(run_table)

    frame = as_frame(envelope.payload)
    if isinstance(frame, pd.DataFrame) and not frame.empty:
        content.append(Paragraph("Results", heading_style))
        shown = frame.head(max_rows)
        rows = [list(map(str, shown.columns))]
        rows += [[_format_cell(v) for v in record] for record in shown.itertuples(index=False)]
        result_table = Table(rows, repeatRows=1)
        result_table.setStyle(TableStyle([
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#dbeafe')),
            ('LINEBELOW', (0, 0), (-1, 0), 1, colors.HexColor('#93c5fd')),
            ('ALIGN', (0, 0), (-1, -1), 'RIGHT'),
        ]))
        content.append(result_table)
        if len(frame) > max_rows:
            content.append(Paragraph(f"{len(frame) - max_rows} further rows omitted", footer_style))

    content.append(Spacer(1, 16))
    content.append(HRFlowable(width="100%", thickness=1, color=colors.HexColor('#d1d5db')))
    content.append(Paragraph(
        f"Summary generated on {datetime.now().strftime('%B %d, %Y at %I:%M %p')}",
        footer_style
    ))

    doc.build(content)
    buffer.seek(0)
    return buffer


def write_scan_summary(envelope: ResultEnvelope, path: str) -> str:
    buffer = generate_scan_summary(envelope)
    try:
        with open(path, "wb") as handle:
            handle.write(buffer.getvalue())
    except OSError as exc:
        raise ThetaLabError(f"cannot write {path}: {exc}") from exc
    return path
