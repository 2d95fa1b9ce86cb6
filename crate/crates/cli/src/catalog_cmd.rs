//! `catalog`: list bundled or user-supplied difference sets, show one entry,
//! or hunt for difference sets with given parameters.

use blockframes::frames::Group;
use blockframes::{catalog, Error, Result};

use crate::common::{base_name, load_catalog_or_bundled, parse_format, parse_group, Format};
use crate::{CatalogAction, CatalogArgs, Cli};

fn group_name(group: Group) -> &'static str {
    match group {
        Group::Cyclic => "cyclic",
        Group::Binary => "binary",
    }
}

pub fn run(cli: &Cli, args: &CatalogArgs) -> Result<()> {
    let format = parse_format(&cli.format)?;
    match &args.action {
        CatalogAction::List { catalog } => {
            let entries = load_catalog_or_bundled(catalog.as_deref())?;
            match format {
                Format::Json => println!("{}", pretty(&entries)?),
                Format::Csv => {
                    println!("name,group,n,m,base,almost");
                    for e in &entries {
                        println!(
                            "{},{},{},{},{},{}",
                            e.name,
                            group_name(e.difference_set.group),
                            e.difference_set.order,
                            e.difference_set.size(),
                            base_name(e.base),
                            e.almost
                        );
                    }
                }
            }
        }
        CatalogAction::Show { name, catalog } => {
            let entries = load_catalog_or_bundled(catalog.as_deref())?;
            let entry = catalog::find_entry(&entries, name)
                .ok_or_else(|| Error::InvalidArgument(format!("no catalog entry named {name:?}")))?;
            match format {
                Format::Json => println!("{}", pretty(entry)?),
                Format::Csv => {
                    println!("field,value");
                    println!("name,{}", entry.name);
                    println!("group,{}", group_name(entry.difference_set.group));
                    println!("n,{}", entry.difference_set.order);
                    println!("m,{}", entry.difference_set.size());
                    println!(
                        "lambda,{}",
                        entry
                            .difference_set
                            .lambda
                            .map(|l| l.to_string())
                            .unwrap_or_default()
                    );
                    println!("base,{}", base_name(entry.base));
                    println!("almost,{}", entry.almost);
                    println!("elements,{:?}", entry.difference_set.elements);
                }
            }
        }
        CatalogAction::Find { group, n, m } => {
            let group = parse_group(group)?;
            let outcome = catalog::find_difference_sets(group, *n, *m)?;
            match format {
                Format::Json => println!("{}", pretty(&outcome)?),
                Format::Csv => {
                    if let Some(reason) = &outcome.reason {
                        println!("# {reason}");
                    }
                    println!("set_id,elements");
                    for (i, set) in outcome.sets.iter().enumerate() {
                        let elems: Vec<String> =
                            set.elements.iter().map(|e| e.to_string()).collect();
                        println!("{i},{}", elems.join(" "));
                    }
                }
            }
            eprintln!("{} difference set(s) with N = {n}, M = {m}", outcome.sets.len());
        }
    }
    Ok(())
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))
}
