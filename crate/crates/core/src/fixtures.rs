//! Networks shipped with the crate, embedded at compile time. The same files
//! live in `fixtures/` for use from the command line.
//!
//! The IEEE 13 node feeder is a reconstruction: the graph has sources on the
//! feeder buses 633, 645 and 684 (numbered 1, 3 and 7) and the line lengths of
//! the public feeder description, converted to miles. The transformer
//! 633–634 and the switch 671–692 are modeled as 500 ft lines.

use crate::netmodel::{load_network, PowerNetwork};

pub const TWO_NODE: &str = include_str!("../fixtures/two_node.json");
pub const PATH4: &str = include_str!("../fixtures/path4.json");
pub const COMPLETE4: &str = include_str!("../fixtures/complete4.json");
pub const STAR: &str = include_str!("../fixtures/star.json");
pub const BARE: &str = include_str!("../fixtures/bare.json");
pub const IEEE13: &str = include_str!("../fixtures/ieee13.json");
pub const IEEE13_50HZ: &str = include_str!("../fixtures/ieee13_50hz.json");
pub const IEEE13_60HZ: &str = include_str!("../fixtures/ieee13_60hz.json");

/// IEEE 13 node id for each fixture node id 1..=13.
pub const IEEE13_BUSES: [u32; 13] = [
    633, 634, 645, 646, 632, 670, 684, 611, 652, 671, 680, 692, 675,
];

fn parse(text: &str) -> PowerNetwork {
    load_network(text).expect("shipped fixture is valid")
}

pub fn two_node() -> PowerNetwork {
    parse(TWO_NODE)
}

pub fn path4() -> PowerNetwork {
    parse(PATH4)
}

pub fn complete4() -> PowerNetwork {
    parse(COMPLETE4)
}

/// Leaves 1, 2, 3 at lengths 9, 5, 7 from the center node 4.
pub fn star() -> PowerNetwork {
    parse(STAR)
}

pub fn bare() -> PowerNetwork {
    parse(BARE)
}

/// 60 Hz, lengths in miles, `r = 0.7 Ω/mile`, `ωℓ = 1.2 Ω/mile`.
pub fn ieee13() -> PowerNetwork {
    parse(IEEE13)
}

pub fn ieee13_50hz() -> PowerNetwork {
    parse(IEEE13_50HZ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron::kron_reduce_real;
    use crate::netmodel::build_laplacian;
    use crate::spectral::{algebraic_connectivity, eig_symmetric};

    #[test]
    fn all_fixtures_parse() {
        for text in [
            TWO_NODE,
            PATH4,
            COMPLETE4,
            STAR,
            BARE,
            IEEE13,
            IEEE13_50HZ,
            IEEE13_60HZ,
        ] {
            parse(text);
        }
        assert_eq!(ieee13().n(), 13);
        assert_eq!(ieee13().m(), 12);
    }

    #[test]
    fn ieee13_reduced_connectivity() {
        let net = ieee13();
        let red =
            kron_reduce_real(build_laplacian(&net).matrix(), &net.source_indices(), None).unwrap();
        let lambda2 = algebraic_connectivity(&eig_symmetric(red.matrix()).unwrap())
            .unwrap()
            .value;
        assert!((lambda2 - 3.1).abs() < 0.1, "{lambda2}");
    }
}
