"""命令之间共享的参数定义; 默认值均为 None, 由 RunConfig 统一补全与校验."""
from pathlib import Path
from typing import Annotated, Optional

import typer

ConfigFile = Annotated[
    Optional[Path], typer.Option("--config", help="JSON file with run configuration keys")
]
LogLevel = Annotated[Optional[str], typer.Option("--log-level", help="loguru level, e.g. DEBUG")]
OutDir = Annotated[Path, typer.Option("--out", "-o", help="Output directory")]

P = Annotated[Optional[int], typer.Option("--p", help="Number of observed variables")]
N = Annotated[Optional[int], typer.Option("--n", help="Number of samples")]
Seed = Annotated[Optional[int], typer.Option("--seed", help="Random seed")]
Seeds = Annotated[Optional[int], typer.Option("--seeds", help="Number of seeds (0..seeds-1)")]

Kernel = Annotated[Optional[str], typer.Option("--kernel", help="epanechnikov | gaussian")]
Bandwidth = Annotated[Optional[str], typer.Option("--bandwidth", help='Bandwidth h or "auto"')]
IndicatorK = Annotated[Optional[float], typer.Option("--indicator-k", help="Indicator coefficient k")]
GStar = Annotated[Optional[float], typer.Option("--g-star", help="Confounder threshold g*")]
GThreshold = Annotated[
    Optional[float], typer.Option("--g-threshold", help="|g| cutoff for the plain GGM subsample")
]
NLambda = Annotated[Optional[int], typer.Option("--n-lambda", help="Number of lambda values")]
LambdaMinRatio = Annotated[
    Optional[float], typer.Option("--lambda-min-ratio", help="lambda_min / lambda_max")
]
Folds = Annotated[Optional[int], typer.Option("--folds", help="Cross-validation folds")]
Methods = Annotated[
    Optional[str], typer.Option("--methods", "--method", help="Comma list of pla,plain,lr,con,tv")
]
RocModeOpt = Annotated[Optional[str], typer.Option("--roc-mode", help="lambda | magnitude")]
Ridge = Annotated[Optional[float], typer.Option("--ridge", help="Ridge added to the smoother Gram")]
Dense = Annotated[Optional[bool], typer.Option("--dense", help="Also write p x p CSV estimates")]
Screening = Annotated[
    Optional[bool], typer.Option("--screening/--no-screening", help="Sequential strong rule")
]
SelectionOpt = Annotated[Optional[str], typer.Option("--selection", help="cv | aic")]
CvRuleOpt = Annotated[Optional[str], typer.Option("--cv-rule", help="min | one_se")]
Sizes = Annotated[Optional[str], typer.Option("--sizes", help="Comma list of sample sizes")]
TvEvalPoints = Annotated[
    Optional[str],
    typer.Option("--tv-eval-points", help="Comma list of g values; TV-GGM averages its estimates over them"),
]
GridStep = Annotated[
    Optional[float], typer.Option("--grid-step", help="Spacing of the simulated confounder grid")
]
