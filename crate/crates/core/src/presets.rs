//! Configurations shipped with the tool, one per reproduced figure plus two
//! controls. The files live in `presets/` at the repository root.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    /// One-line plotting recipe for the CSV the preset produces.
    pub plot: &'static str,
    pub toml: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal, $plot:literal) => {
        Preset {
            name: $name,
            summary: $summary,
            plot: $plot,
            toml: include_str!(concat!("../../../presets/", $name, ".toml")),
        }
    };
}

pub static PRESETS: &[Preset] = &[
    preset!(
        "fig1b",
        "seven-peak one-photon spectrum, sensor scan",
        "python -c \"import pandas as p;d=p.read_csv('fig1b.csv',comment='#');d.plot(x='omega',y='spectrum').figure.savefig('fig1b.png')\""
    ),
    preset!(
        "fig2a",
        "zero-delay two-photon correlation map g2(w1, w2)",
        "python -c \"import pandas as p,numpy as n,matplotlib.pyplot as m;d=p.read_csv('fig2a.csv',comment='#').pivot(index='omega2',columns='omega1',values='g2');m.pcolormesh(d.columns,d.index,n.log10(d));m.savefig('fig2a.png')\""
    ),
    preset!(
        "fig2c",
        "time-resolved g2(D13, -D23, tau)",
        "python -c \"import pandas as p;d=p.read_csv('fig2c.csv',comment='#');d.plot(x='tau',y='g2').figure.savefig('fig2c.png')\""
    ),
    preset!(
        "fig3b",
        "Cauchy-Schwarz ratio map",
        "python -c \"import pandas as p,numpy as n,matplotlib.pyplot as m;d=p.read_csv('fig3b.csv',comment='#').pivot(index='omega2',columns='omega1',values='ratio');m.pcolormesh(d.columns,d.index,n.log10(d));m.savefig('fig3b.png')\""
    ),
    preset!(
        "fig3c",
        "Bell quantifier on the central antidiagonal",
        "python -c \"import pandas as p;d=p.read_csv('fig3c.csv',comment='#');d.plot(x='omega1',y='bs').figure.savefig('fig3c.png')\""
    ),
    preset!(
        "fig4a",
        "Cauchy-Schwarz ratio on w1 + w2 = D12, narrow sensors",
        "python -c \"import pandas as p;d=p.read_csv('fig4a.csv',comment='#');d.plot(x='omega1',y='ratio',logy=True).figure.savefig('fig4a.png')\""
    ),
    preset!(
        "fig4b",
        "Cauchy-Schwarz ratio on the central antidiagonal, narrow sensors",
        "python -c \"import pandas as p;d=p.read_csv('fig4b.csv',comment='#');d.plot(x='omega1',y='ratio',logy=True).figure.savefig('fig4b.png')\""
    ),
    preset!(
        "fig4c",
        "Bell quantifier on the central antidiagonal, narrow sensors",
        "python -c \"import pandas as p;d=p.read_csv('fig4c.csv',comment='#');d.plot(x='omega1',y='bs').figure.savefig('fig4c.png')\""
    ),
    preset!(
        "mollow-single-atom",
        "single-atom Mollow triplet from the Fourier transform of g1",
        "python -c \"import pandas as p;d=p.read_csv('mollow-single-atom.csv',comment='#');d.plot(x='omega',y='spectrum').figure.savefig('mollow.png')\""
    ),
    preset!(
        "independent-atoms",
        "control spectrum with the dipole-dipole coupling switched off",
        "python -c \"import pandas as p;d=p.read_csv('independent-atoms.csv',comment='#');d.plot(x='omega',y='spectrum').figure.savefig('independent.png')\""
    ),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
