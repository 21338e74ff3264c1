"""
Interface de linha de comando do SPNet
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config.settings import CLI_CONFIG, LEVEL_RULES, NUMERIC_CONFIG, configure_logging
from ..core.geometry import PointCloud
from ..core.kernel_layout import build_layout, influence_coverage
from ..core.ply_parser import PLYParser
from ..core.sampling import grid_sample, poisson_disk_sample
from ..data.scenes import generate_dataset, load_dataset, synthetic_dataset
from ..training.evaluator import evaluate, evaluate_checkpoint
from ..training.gradcheck import GRADCHECK_TARGETS, run_gradcheck
from ..training.trainer import TrainConfig, Trainer, resolve_dataset
from ..utils.file_handler import FileHandler
from ..utils.formatters import ReportFormatter
from ..utils.validators import ParameterError, SPNetError

logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """
    Cria parser de argumentos da linha de comando

    Returns:
        ArgumentParser configurado com os subcomandos
    """
    parser = argparse.ArgumentParser(
        prog="spnet",
        description="Segmentação semântica de nuvens de pontos com SPConv",
        epilog="Exemplos de uso:\n"
        "  python main.py gen-data --seed 7 --out dados/\n"
        "  python main.py train --config config/synthetic_train.conf --out runs/a\n"
        "  python main.py eval --checkpoint runs/a/checkpoint.spn --data dados/\n"
        "  python main.py gradcheck --target spconv --seed 0",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Saída detalhada")
    parser.add_argument("--version", action="version", version="SPNet Segmentation 1.0.0")

    sub = parser.add_subparsers(dest="command")

    train = sub.add_parser("train", help="Treina uma rede")
    train.add_argument("--config", help="Arquivo chave = valor (padrão: configuração padrão)")
    train.add_argument("--out", required=True, help="Diretório de saída")
    train.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="CHAVE=VALOR",
        help="Sobrescreve uma chave da configuração (repetível)",
    )

    evaluate_cmd = sub.add_parser("eval", help="Avalia um checkpoint")
    evaluate_cmd.add_argument("--checkpoint", required=True, help="Arquivo de checkpoint")
    evaluate_cmd.add_argument(
        "--data", default="synthetic", help="Diretório com PLYs ou 'synthetic'"
    )
    evaluate_cmd.add_argument("--report", help="Arquivo TSV do relatório")
    evaluate_cmd.add_argument("--scenes", type=int, default=5, help="Cenas sintéticas")
    evaluate_cmd.add_argument("--seed", type=int, default=100000, help="Semente das cenas")
    evaluate_cmd.add_argument("--points-per-primitive", type=int, default=1350)

    gradcheck = sub.add_parser("gradcheck", help="Verifica gradientes por diferenças finitas")
    gradcheck.add_argument("--target", required=True, choices=GRADCHECK_TARGETS)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--points", type=int, default=32, help="Pontos da instância (<= 64)")
    gradcheck.add_argument("--entries", type=int, default=8, help="Entradas por tensor")
    gradcheck.add_argument(
        "--batch-norm", action="store_true", help="Verifica também a BatchNorm em modo treino"
    )

    sample = sub.add_parser("sample", help="Subamostra um PLY")
    sample.add_argument("--input", required=True, help="PLY de entrada")
    sample.add_argument("--out", required=True, help="PLY de saída")
    sample.add_argument("--radius", type=float, required=True, help="Raio r_p / lado da célula")
    sample.add_argument("--method", choices=["pds", "grid"], default="pds")
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--ascii", action="store_true", help="Grava PLY ascii")

    dump = sub.add_parser("kernel-dump", help="Grava a disposição de kernel em PLY")
    dump.add_argument("--out", required=True, help="PLY de saída")
    dump.add_argument("--mode", choices=["spconv", "kpconv"], default="spconv")
    dump.add_argument("--shells", type=int, default=3)
    dump.add_argument("--points", type=int, default=14, help="Pontos por casca externa")
    dump.add_argument("--influence", type=float, default=1.0, help="Raio de influência v")
    dump.add_argument("--seed", type=int, default=42)

    gen = sub.add_parser("gen-data", help="Gera cenas sintéticas rotuladas")
    gen.add_argument("--out", required=True, help="Diretório de saída")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=20)
    gen.add_argument("--points-per-primitive", type=int, default=1350)
    gen.add_argument("--noise", type=float, default=0.002)
    gen.add_argument("--ascii", action="store_true", help="Grava PLY ascii")

    return parser


def print_header():
    """Imprime cabeçalho do programa"""
    print("=" * 60)
    print("🔄 SPNet Segmentation")
    print("=" * 60)


def parse_overrides(pairs: List[str]) -> dict:
    """Converte `chave=valor` em dicionário"""
    values = {}
    for pair in pairs:
        if "=" not in pair:
            raise ParameterError(f"Sobrescrita sem '=': {pair!r}")
        key, value = pair.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def handle_train(args) -> int:
    values = FileHandler().read_key_value_file(args.config) if args.config else {}
    values.update(parse_overrides(args.set))
    config = TrainConfig.from_mapping(values)

    scenes = resolve_dataset(config.train_data, config)
    print(f"🔄 Treinando em {len(scenes)} cenas por {config.epochs} épocas")

    trainer = Trainer(config, args.out)
    history = trainer.train(scenes)
    final = history[-1]
    print(f"✅ Treino concluído: OA={final['oa']:.4f} mIoU={final['miou']:.4f}")
    print(f"📁 Checkpoint: {trainer.checkpoint_path}")
    print(f"📁 Métricas: {trainer.metrics_path}")

    if config.test_data:
        test_scenes = resolve_dataset(config.test_data, config, test=True)
        report = evaluate(trainer.model, test_scenes)
        formatter = ReportFormatter()
        print("\n📊 Conjunto de teste:")
        print(formatter.metrics_table(report))
        FileHandler().write_text_atomic(
            formatter.metrics_tsv(report), Path(args.out) / "test_metrics.tsv"
        )
    return 0


def handle_eval(args) -> int:
    if args.data == "synthetic":
        scenes = synthetic_dataset(args.scenes, args.seed, args.points_per_primitive)
    else:
        scenes = load_dataset(args.data)

    report = evaluate_checkpoint(args.checkpoint, scenes, args.report)
    print(ReportFormatter().metrics_table(report))
    if args.report:
        print(f"📁 Relatório: {args.report}")
    return 0


def handle_gradcheck(args) -> int:
    results, passed = run_gradcheck(
        args.target, args.seed, args.points, args.entries, args.batch_norm
    )
    print(ReportFormatter().gradcheck_report(results, NUMERIC_CONFIG["gradcheck_tolerance"]))
    if passed:
        print("✅ Gradientes conferem")
        return 0
    print("❌ Gradientes divergentes")
    return 1


def handle_sample(args) -> int:
    parser = PLYParser()
    cloud = parser.read(args.input)

    if args.method == "pds":
        subset = cloud.subset(poisson_disk_sample(cloud, args.radius, args.seed))
    else:
        subset = grid_sample(cloud, args.radius)

    parser.write(subset, args.out, binary=not args.ascii)
    print(f"✅ {len(cloud)} → {len(subset)} pontos ({args.method}, r={args.radius})")
    print(f"📁 Saída: {args.out}")
    return 0


def handle_kernel_dump(args) -> int:
    v = args.influence
    if args.mode == "kpconv":
        shells, radii = 2, (LEVEL_RULES["baseline_shell_radius"] * v,)
    else:
        shells = args.shells
        outer = LEVEL_RULES["shell_radii"][-1] * v
        radii = tuple(outer * (i + 1) / (shells - 1) for i in range(shells - 1))

    layout = build_layout(shells, args.points, radii, v, args.seed)
    cloud = PointCloud(positions=layout.points, labels=layout.shell_index)
    PLYParser().write(cloud, args.out, binary=False, coordinate_type="double")

    inner = radii[0] if radii else v
    coverage = influence_coverage(layout, inner)
    print(f"✅ {layout.total_kernel_count} pontos de kernel em {layout.num_shells} cascas")
    print(f"📏 Cobertura da bola de raio {inner:g}: {coverage:.4f}")
    print(f"📁 Saída: {args.out}")
    return 0


def handle_gen_data(args) -> int:
    manifest = generate_dataset(
        args.out, args.count, args.seed, args.points_per_primitive, args.noise, not args.ascii
    )
    print(f"✅ {args.count} cenas geradas")
    print(f"📁 Manifesto: {manifest}")
    return 0


HANDLERS = {
    "train": handle_train,
    "eval": handle_eval,
    "gradcheck": handle_gradcheck,
    "sample": handle_sample,
    "kernel-dump": handle_kernel_dump,
    "gen-data": handle_gen_data,
}


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """
    Executa um subcomando

    Args:
        argv: Argumentos (sem o nome do programa)

    Returns:
        Código de saída: 0 sucesso, 1 falha de validação, 2 uso incorreto
    """
    parser = create_parser()
    argv = list(sys.argv[1:] if argv is None else argv)

    if not argv:
        if CLI_CONFIG["show_header"]:
            print_header()
        parser.print_help()
        print("\n💡 Dica: Use 'python main.py gen-data --out dados/' para começar")
        return 2

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    if args.command is None:
        parser.print_usage()
        return 2

    configure_logging(args.verbose or CLI_CONFIG["verbose_default"])

    try:
        return HANDLERS[args.command](args)
    except SPNetError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return 1
    except KeyboardInterrupt:
        print("\n\n👋 Operação cancelada pelo usuário")
        return 1


def main():
    """Função principal da interface CLI"""
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
