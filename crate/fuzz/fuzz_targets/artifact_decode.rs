#![no_main]

use gsfavar::artifact::Artifact;
use gsfavar::bvar::{TivDraws, TvpChain};
use gsfavar::data::Panel;
use gsfavar::factors::{FactorSet, LoadingDraws};
use gsfavar::forecast::ForecastRun;
use gsfavar::gsae::GsAeParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(art) = Artifact::decode(data) else { return };
    // whatever decodes must survive a re-encode unchanged
    let again = Artifact::decode(&art.encode()).expect("re-encoded artifact decodes");
    assert_eq!(again.encode(), art.encode());
    let _ = Panel::from_artifact(&art);
    let _ = FactorSet::from_artifact(&art);
    let _ = LoadingDraws::from_artifact(&art);
    let _ = GsAeParams::from_artifact(&art);
    let _ = TivDraws::from_artifact(&art);
    let _ = TvpChain::from_artifact(&art);
    let _ = ForecastRun::from_artifact(&art);
});
