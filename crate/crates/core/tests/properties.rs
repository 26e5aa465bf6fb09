use geometa::embio::{self, intersect_vocab, parse_embeddings, write_embeddings, PreprocessOptions};
use geometa::eval::{spearman, AnalogyDataset, SimilarityDataset};
use geometa::manifold::{project_tangent_orth, retract_orth, retract_spd, sym, OrthogonalPoint, SpdPoint};
use geometa::{EmbeddingTable, ParamsFile};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn table_strategy() -> impl Strategy<Value = EmbeddingTable> {
    (1usize..5, 1usize..12).prop_flat_map(|(d, n)| {
        (
            proptest::collection::btree_set("[a-z]{1,6}", n),
            proptest::collection::vec(-1e3f64..1e3, d * n),
        )
            .prop_map(move |(words, data)| {
                let words: Vec<String> = words.into_iter().collect();
                let n = words.len();
                EmbeddingTable::new(words, DMatrix::from_vec(d, n, data[..d * n].to_vec())).unwrap()
            })
    })
}

fn square(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| DMatrix::from_vec(d, d, v))
}

proptest! {
    #[test]
    fn save_load_round_trip(t in table_strategy(), header in any::<bool>()) {
        let mut buf = Vec::new();
        write_embeddings(&t, &mut buf, header).unwrap();
        let (back, _) = parse_embeddings(&buf, None).unwrap();
        prop_assert_eq!(back.words(), t.words());
        prop_assert!((back.vectors() - t.vectors()).abs().max() <= 1e-6);
    }

    #[test]
    fn intersection_is_idempotent(a in table_strategy(), b in table_strategy()) {
        if let Ok(pair) = intersect_vocab(&a, &b) {
            let again = intersect_vocab(pair.x(), pair.z()).unwrap();
            prop_assert_eq!(again, pair);
        }
    }

    #[test]
    fn unit_normalized_columns(t in table_strategy()) {
        let (u, _) = embio::preprocess(&t, PreprocessOptions { unit_normalize: true, mean_center: false });
        for (orig, col) in t.vectors().column_iter().zip(u.vectors().column_iter()) {
            if orig.norm() > 0.0 {
                prop_assert!((col.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Ok(r) = spearman(&xs, &ys) {
            let tx: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp() + 3.0).collect();
            let ty: Vec<f64> = ys.iter().map(|y| y * y * y).collect();
            let r2 = spearman(&tx, &ty).unwrap();
            prop_assert!((r - r2).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn orthogonal_projection_and_retraction(g in square(4), a in square(4), step in 0.0f64..0.5) {
        let q = a.qr().q();
        let u = OrthogonalPoint::new(q).unwrap();
        let xi = project_tangent_orth(&u, &g);
        let twice = project_tangent_orth(&u, &xi);
        prop_assert!((&twice - &xi).norm() <= 1e-12);
        if let Ok(next) = retract_orth(&u, &xi, step) {
            prop_assert!(geometa::manifold::orth_drift(next.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn spd_retraction_stays_positive(a in square(3), g in square(3), step in -3.0f64..3.0) {
        let b = SpdPoint::new(sym(&(&a * a.transpose() + DMatrix::identity(3, 3)))).unwrap();
        let next = retract_spd(&b, &sym(&g), step).unwrap();
        prop_assert!(next.min_eigenvalue() > 0.0);
    }

    #[test]
    fn parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_embeddings(&bytes, Some(8));
        let _ = SimilarityDataset::parse_bytes("f", &bytes);
        let _ = AnalogyDataset::parse_bytes("f", &bytes, false);
        let _ = AnalogyDataset::parse_bytes("f", &bytes, true);
        let _ = ParamsFile::parse_bytes(&bytes);
    }

    #[test]
    fn text_parsers_never_panic(text in "[ a-z0-9.\\-\\t\\n:#e]{0,200}") {
        let _ = parse_embeddings(text.as_bytes(), None);
        let _ = SimilarityDataset::parse("f", &text);
        let _ = AnalogyDataset::parse("f", &text, true);
        let _ = ParamsFile::parse(&text);
    }
}
