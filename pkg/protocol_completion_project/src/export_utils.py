# src/export_utils.py

import json
import logging
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)


class ExportUtilities:
    """Export utilities for CSV, JSON and text reports"""

    def verification_rows(self, report, product=None):
        rows = []
        for r in report.results:
            data = r.to_dict(product)
            witness = data.get('witness')
            if isinstance(witness, dict):
                witness = ' '.join(witness['stem']) + ' | ' + ' '.join(witness['cycle'])
            elif witness is not None:
                witness = ' '.join(witness)
            rows.append({
                'requirement': r.requirement,
                'verdict': data['verdict'],
                'detail': r.detail,
                'witness': witness or '',
                'state': data.get('state', ''),
            })
        return rows

    def synthesis_rows(self, result, processes):
        if result.completion is None:
            return [{'engine': result.engine, 'status': result.status, 'process': '',
                     'transition': ''}]
        return [{'engine': result.engine, 'status': result.status, 'process': p.name,
                 'transition': p.describe(t)}
                for p, added in zip(processes, result.completion.added) for t in sorted(added)]

    def export_to_csv(self, rows, filename, columns=None):
        """Export a list of flat records to CSV"""
        df = pd.DataFrame(rows, columns=columns)
        for column in df.columns:
            df[column] = df[column].apply(lambda x: ', '.join(map(str, x)) if isinstance(x, (list, tuple)) else x)
        _ensure_parent(filename)
        df.to_csv(filename, index=False)
        logger.info("exported %d rows to %s", len(df), filename)
        return df

    def export_to_json(self, results, filename):
        _ensure_parent(filename)
        with open(filename, 'w') as f:
            json.dump(results, indent=2, fp=f)
        logger.info("exported JSON to %s", filename)

    def export_experiment_table(self, rows, filename=None):
        """
        Experiment rows as a DataFrame, indexed by experiment name when present.

        Written to `filename` as CSV when given.
        """
        df = pd.DataFrame(rows)
        if 'experiment' in df.columns:
            df = df.set_index('experiment')
        if filename is not None:
            _ensure_parent(filename)
            df.to_csv(filename)
            logger.info("exported experiment table (%d rows) to %s", len(df), filename)
        return df

    def generate_text_report(self, title, sections):
        """
        Boxed plain-text report between "=" rules.

        Args:
            title: report heading
            sections: list of (heading, list of lines)
        """
        report = ["=" * 80, title, "=" * 80]
        for heading, lines in sections:
            report.append(f"\n{heading}")
            report.extend(f"   {line}" for line in lines)
        return '\n'.join(report)

    def generate_synthesis_report(self, inst, result, report=None, skeletons=None):
        sections = []
        if skeletons:
            sections.append(('Skeletons:', [f"{name}: {s.automaton.num_states} states, "
                                            f"{len(s.automaton.transitions)} transitions"
                                            for name, s in skeletons.items()]))
        summary = [f"Engine: {result.engine}", f"Status: {result.status}"]
        if result.engine == 'explicit':
            summary.append(f"Nodes explored: {result.nodes:,} (pruned {result.pruned:,}, "
                           f"rejected {result.rejected:,})")
        for key, value in result.statistics.items():
            summary.append(f"{key}: {value:,}" if isinstance(value, int) else f"{key}: {value}")
        summary.append(f"Wall time: {result.elapsed:.2f}s")
        if result.reason:
            summary.append(f"Reason: {result.reason}")
        sections.append(('Search:', summary))
        if result.completion is not None:
            sections.append((f"Transitions added: {result.completion.size}",
                             result.completion.describe(inst.processes)))
        if report is not None:
            sections.append(('Re-verification:', report.render_text().splitlines()))
        return self.generate_text_report(f"SYNTHESIS: {inst.name}", sections)


def _ensure_parent(filename):
    Path(filename).parent.mkdir(parents=True, exist_ok=True)
