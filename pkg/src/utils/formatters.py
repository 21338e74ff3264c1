"""
Módulo de formatação de relatórios (métricas, logs de treino, gradcheck)
"""

import math
from typing import Dict, List, Sequence


class ReportFormatter:
    """
    Classe para formatação de relatórios em texto alinhado e TSV
    """

    def __init__(self, precision: int = 6):
        """Inicializa formatador"""
        self.precision = precision

    def format_value(self, value: float) -> str:
        """
        Formata um número real com a precisão configurada

        Args:
            value: Valor a formatar

        Returns:
            Texto do valor ("nan" para valores indefinidos)
        """
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "nan"
        return f"{value:.{self.precision}f}"

    def metrics_table(self, report: Dict) -> str:
        """
        Tabela alinhada com IoU e acurácia por classe, mIoU e OA

        Args:
            report: Saída de ConfusionMatrix.summary()

        Returns:
            Texto multi-linha
        """
        rows = [("classe", "IoU", "acurácia", "pontos")]
        for entry in report["classes"]:
            rows.append(
                (
                    entry["name"],
                    self.format_value(entry["iou"]),
                    self.format_value(entry["accuracy"]),
                    str(entry["points"]),
                )
            )
        rows.append(("mIoU", self.format_value(report["miou"]), "", ""))
        rows.append(("OA", self.format_value(report["oa"]), "", str(report["points"])))

        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        lines = []
        for row in rows:
            first = row[0].ljust(widths[0])
            rest = [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
            lines.append("  ".join([first] + rest).rstrip())
        return "\n".join(lines)

    def metrics_tsv(self, report: Dict) -> str:
        """
        Relatório em TSV: cabeçalho, uma linha por classe e `__overall__`

        Na linha `__overall__` a coluna iou traz o mIoU e accuracy traz o OA.
        """
        lines = ["class\tiou\taccuracy\tpoints"]
        for entry in report["classes"]:
            lines.append(
                f"{entry['name']}\t{self.format_value(entry['iou'])}\t"
                f"{self.format_value(entry['accuracy'])}\t{entry['points']}"
            )
        lines.append(
            f"__overall__\t{self.format_value(report['miou'])}\t"
            f"{self.format_value(report['oa'])}\t{report['points']}"
        )
        return "\n".join(lines) + "\n"

    def history_tsv(self, history: Sequence[Dict]) -> str:
        """Log de treino: `epoch loss OA mIoU` separados por tabulação"""
        lines = ["epoch\tloss\tOA\tmIoU"]
        for row in history:
            lines.append(
                f"{row['epoch']}\t{self.format_value(row['loss'])}\t"
                f"{self.format_value(row['oa'])}\t{self.format_value(row['miou'])}"
            )
        return "\n".join(lines) + "\n"

    def gradcheck_report(self, results: List[Dict], tolerance: float) -> str:
        """
        Relatório do gradcheck: erro relativo máximo por tensor

        Args:
            results: Itens com "name", "max_error" e "checked"
            tolerance: Tolerância usada

        Returns:
            Texto com uma linha por tensor e marcação dos reprovados
        """
        width = max([len(r["name"]) for r in results] + [6])
        lines = [f"{'tensor'.ljust(width)}  {'erro máx':>12}  {'amostras':>8}"]
        for result in results:
            flag = "" if result["max_error"] <= tolerance else "  <-- FALHOU"
            lines.append(
                f"{result['name'].ljust(width)}  {result['max_error']:12.3e}  "
                f"{result['checked']:8d}{flag}"
            )
        failed = sum(1 for r in results if r["max_error"] > tolerance)
        lines.append(
            f"{len(results)} tensores verificados, {failed} acima de {tolerance:.0e}"
        )
        return "\n".join(lines)
