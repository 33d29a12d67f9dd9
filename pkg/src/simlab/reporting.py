"""CSV emission and plot-script generation.

Every CSV starts with '# key = value' comment lines carrying the resolved
experiment configuration, so any output file can be regenerated from its own
header.  Floats are formatted with %.12g for byte-stable reruns.
"""

import csv
import io


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_csv(rows, config=None):
    """CSV text for a list of row dicts, with a config comment header."""
    buf = io.StringIO()
    for key in sorted(config or {}):
        buf.write(f"# {key} = {_fmt(config[key])}\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        fields = list(rows[0])
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(row[f]) for f in fields])
    return buf.getvalue()


def write_csv(path, rows, config=None):
    text = render_csv(rows, config)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def read_csv_columns(path):
    """Column names of a CSV written by ``write_csv`` (skipping the header)."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                return line.strip().split(",")
    return []


_FIG4_SCRIPT = """\
set datafile separator ","
set datafile commentschars "#"
set key outside
set yrange [0:1]
set xlabel "sentence"
set ylabel "rho_max"
set arrow from graph 0, first {threshold} to graph 1, first {threshold} nohead dt 2
plot "{csv}" using "sentence_id":($0+1 > 0 && strcol("attacked") eq "0" ? column("rho_max") : 1/0) \\
        with points pt 6 lc rgb "blue" title "clean", \\
     "{csv}" using "sentence_id":(strcol("attacked") eq "1" ? column("rho_max") : 1/0) \\
        with points pt 8 lc rgb "red" title "attacked"
pause -1
"""

_TAIL_SCRIPT = """\
set datafile separator ","
set datafile commentschars "#"
set logscale y
set xlabel "epsilon"
set ylabel "probability"
plot "{csv}" using "epsilon":"empirical_lower_tail" with linespoints title "empirical lower", \\
     "{csv}" using "epsilon":"bound_lower" with lines dt 2 title "exp(-M eps^2/4)", \\
     "{csv}" using "epsilon":"empirical_upper_tail" with linespoints title "empirical upper", \\
     "{csv}" using "epsilon":"bound_upper" with lines dt 3 title "exp(-M eps^2/12)"
pause -1
"""

_REQUIRED_COLUMNS = {
    "fig4": {"sentence_id", "attacked", "rho_max"},
    "tail": {"epsilon", "empirical_lower_tail", "bound_lower", "empirical_upper_tail", "bound_upper"},
}


def emit_plot_script(csv_path, kind, out_path, threshold=0.4):
    """Write a gnuplot script for a previously emitted CSV (no plotting here)."""
    if kind not in _REQUIRED_COLUMNS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {sorted(_REQUIRED_COLUMNS)}")
    columns = set(read_csv_columns(csv_path))
    missing = _REQUIRED_COLUMNS[kind] - columns
    if missing:
        raise ValueError(f"CSV {csv_path} lacks columns {sorted(missing)} needed for {kind}")
    template = _FIG4_SCRIPT if kind == "fig4" else _TAIL_SCRIPT
    text = template.format(csv=csv_path, threshold=threshold)
    with open(out_path, "w") as fh:
        fh.write(text)
    return out_path
