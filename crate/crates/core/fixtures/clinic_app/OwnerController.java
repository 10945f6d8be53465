package org.acme.clinic;

import org.framework.web.*;

@RequestMapping("/owners")
public class OwnerController {

    private final ClinicService clinic;

    @GetMapping
    public OwnerList listOwners() {
        return clinic.ownerDirectory();
    }

    @PostMapping("/new")
    public OwnerCreated createOwner(@RequestParam("name") String name,
                                    @RequestParam("telephone") String telephone) {
        return clinic.createOwner(name, telephone);
    }

    @GetMapping("/{ownerId}")
    public OwnerDetail showOwner(@PathVariable("ownerId") int ownerId) {
        return clinic.getOwner(ownerId);
    }
}
