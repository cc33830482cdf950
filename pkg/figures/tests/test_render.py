import numpy as np
import pytest

import netfigs


def write_csv(path, names, columns, comment="preset=unit seed=0"):
    with open(path, "w", newline="\n") as fh:
        fh.write("# %s\n" % comment)
        fh.write(",".join(names) + "\n")
        for i in range(len(columns[0])):
            fh.write(",".join("%.17g" % col[i] for col in columns) + "\n")


@pytest.fixture
def sample_csvs(tmp_path):
    t = np.linspace(0.0, 1.0, 21)
    limit = tmp_path / "limit.csv"
    write_csv(limit, ["t", "v_e_1", "v_i_1"], [t, 0.5 * np.ones_like(t), np.cos(t)])
    particle = tmp_path / "particle.csv"
    write_csv(particle, ["t", "vhat_e_1", "vhat_i_1"],
              [t, 0.5 + 0.01 * np.sin(9 * t), np.cos(t) + 0.02 * np.sin(7 * t)])
    return limit, particle


def spec_for(sample_csvs, tmp_path, lines=None):
    limit, particle = sample_csvs
    if lines is None:
        lines = (netfigs.LineSpec(0, "v_e_1", "solid", "excitatory"),
                 netfigs.LineSpec(0, "v_i_1", "solid", "inhibitory"),
                 netfigs.LineSpec(1, "vhat_e_1", "dotted", "excitatory"),
                 netfigs.LineSpec(1, "vhat_i_1", "dotted", "inhibitory"))
    return netfigs.FigureSpec(inputs=(str(limit), str(particle)),
                              lines=lines, output=str(tmp_path / "fig.png"))


def test_render_writes_image(sample_csvs, tmp_path):
    spec = spec_for(sample_csvs, tmp_path)
    out = netfigs.render(spec)
    assert out == str(tmp_path / "fig.png")
    data = (tmp_path / "fig.png").read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"


def test_plotted_arrays_equal_csv_arrays(sample_csvs, tmp_path):
    # Pure I/O contract: what is plotted is exactly what was parsed.
    spec = spec_for(sample_csvs, tmp_path)
    fig, plotted = netfigs.build(spec)
    limit_table = netfigs.read_series(spec.inputs[0])
    particle_table = netfigs.read_series(spec.inputs[1])
    expected = [limit_table["v_e_1"], limit_table["v_i_1"],
                particle_table["vhat_e_1"], particle_table["vhat_i_1"]]
    for (t, y), ref in zip(plotted, expected):
        assert np.array_equal(y, ref)
    ax = fig.axes[0]
    for artist, (t, y) in zip(ax.lines, plotted):
        assert np.array_equal(artist.get_ydata(), y)
        assert np.array_equal(artist.get_xdata(), t)
    import matplotlib.pyplot as plt
    plt.close(fig)


def test_styles_and_colors_follow_roles(sample_csvs, tmp_path):
    spec = spec_for(sample_csvs, tmp_path)
    fig, _ = netfigs.build(spec)
    ax = fig.axes[0]
    assert ax.lines[0].get_linestyle() == "-"
    assert ax.lines[2].get_linestyle() == ":"
    assert ax.lines[0].get_color() == ax.lines[2].get_color()   # excitatory pair
    assert ax.lines[1].get_color() == ax.lines[3].get_color()   # inhibitory pair
    assert ax.lines[0].get_color() != ax.lines[1].get_color()
    assert ax.get_xlabel() == "time"
    import matplotlib.pyplot as plt
    plt.close(fig)


def test_empty_line_list_writes_nothing(sample_csvs, tmp_path):
    spec = spec_for(sample_csvs, tmp_path, lines=())
    with pytest.raises(netfigs.EmptyFigure):
        netfigs.render(spec)
    assert not (tmp_path / "fig.png").exists()


def test_missing_column(sample_csvs, tmp_path):
    spec = spec_for(sample_csvs, tmp_path,
                    lines=(netfigs.LineSpec(0, "nope", "solid", "excitatory"),))
    with pytest.raises(netfigs.MissingColumn):
        netfigs.render(spec)


def test_missing_file(tmp_path):
    spec = netfigs.FigureSpec(
        inputs=(str(tmp_path / "absent.csv"),),
        lines=(netfigs.LineSpec(0, "v_e_1", "solid", "excitatory"),),
        output=str(tmp_path / "fig.png"))
    with pytest.raises(FileNotFoundError):
        netfigs.render(spec)


def test_two_panel_figure(sample_csvs, tmp_path):
    limit, particle = sample_csvs
    spec = netfigs.FigureSpec(
        inputs=(str(limit), str(particle)),
        lines=(netfigs.LineSpec(0, "v_e_1", "solid", "excitatory", panel=0),
               netfigs.LineSpec(1, "vhat_e_1", "dotted", "excitatory", panel=1)),
        output=str(tmp_path / "two.png"),
        panel_titles=("left", "right"))
    fig, _ = netfigs.build(spec)
    assert len(fig.axes) == 2
    assert fig.axes[0].get_title() == "left"
    assert fig.axes[1].get_title() == "right"
    import matplotlib.pyplot as plt
    plt.close(fig)


def test_render_is_byte_stable(sample_csvs, tmp_path):
    spec = spec_for(sample_csvs, tmp_path)
    netfigs.render(spec)
    first = (tmp_path / "fig.png").read_bytes()
    netfigs.render(spec)
    assert (tmp_path / "fig.png").read_bytes() == first


def test_linespec_validation():
    with pytest.raises(ValueError):
        netfigs.LineSpec(0, "c", "dashed", "excitatory")
    with pytest.raises(ValueError):
        netfigs.LineSpec(0, "c", "solid", "mystery")
