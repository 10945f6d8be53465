package org.acme.clinic;

import org.framework.web.*;

@RequestMapping("/vets")
public class VetController {

    private final ClinicService clinic;

    @GetMapping
    public VetList listVets() {
        return clinic.vetBoard();
    }
}
