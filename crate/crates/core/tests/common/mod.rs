#![allow(dead_code)]

use emoxfer::audio::synth::{CorpusRecipe, DomainRecipe, DomainTransform};
use emoxfer::audio::{EmotionLabel, Preprocess};
use emoxfer::experiments::{Corpus, ExperimentSettings, RunSetup};
use emoxfer::network::{ConvConfig, NetworkConfig, TrainConfig};
use emoxfer::optim::AdaDeltaConfig;

pub const LEN: usize = 240;

pub fn tiny_network(use_lstm: bool) -> NetworkConfig {
    NetworkConfig {
        input_length: LEN,
        conv1: ConvConfig {
            filters: 4,
            width: 8,
            stride: 4,
        },
        conv2: ConvConfig {
            filters: 4,
            width: 4,
            stride: 2,
        },
        lstm_hidden: 4,
        fc_sizes: [8, 8],
        num_classes: 6,
        dropout: 0.3,
        use_lstm,
        scale: 1.0,
    }
}

pub fn domain(id: &str, rotation: usize, n: usize, emotions: Option<Vec<EmotionLabel>>) -> DomainRecipe {
    DomainRecipe {
        id: id.into(),
        rotation,
        carrier_scale: 1.0,
        transform: DomainTransform {
            gain: 1.0,
            noise_std: 0.05,
            tilt: 0.0,
        },
        samples_per_emotion: n,
        emotions,
    }
}

pub fn corpus(domains: Vec<DomainRecipe>, seed: u64) -> Corpus {
    let recipe = CorpusRecipe {
        rate: 16_000,
        length: LEN,
        jitter: 0.03,
        domains,
    };
    Corpus::from_synth(&recipe.specs(seed).unwrap(), &Preprocess::new(LEN)).unwrap()
}

pub fn setup(network: NetworkConfig, seed: u64, epochs: usize, experiment: ExperimentSettings) -> RunSetup {
    RunSetup {
        network,
        optimizer: AdaDeltaConfig::default(),
        train: TrainConfig {
            batch_size: 8,
            epochs,
            seed,
        },
        experiment,
    }
}

pub fn settings(targets: &[&str], pretrain: usize, finetune: usize) -> ExperimentSettings {
    ExperimentSettings {
        targets: targets.iter().map(|s| s.to_string()).collect(),
        pretrain_epochs: pretrain,
        finetune_epochs: finetune,
        ..ExperimentSettings::default()
    }
}
