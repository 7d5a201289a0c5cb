import typer

from plaggm.cli.commands import benchmark, fit, roc, simulate

app = typer.Typer(
    name="plaggm",
    help="Sparse GGM structure estimation under an observed confounder (PLA-GGM)",
    no_args_is_help=True,
    add_completion=False,
)

# 数据生成
app.command("simulate")(simulate.simulate)

# 拟合与评估
app.command("fit")(fit.fit)
app.command("roc")(roc.roc)

# 基准实验
app.command("benchmark")(benchmark.benchmark)
app.command("rate")(benchmark.rate)
